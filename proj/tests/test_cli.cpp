#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oilfield/csv.hpp"
#include "oilfield/pipeline.hpp"
#include "support/synthetic.hpp"

using namespace oilfield;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir(const std::string& stem) {
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    const fs::path dir = fs::temp_directory_path() / (stem + "_" + std::to_string(stamp));
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(OILFIELD_CLI_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path write_synthetic_csv(const fs::path& dir, std::int64_t days = 300, std::uint64_t seed = 7,
                             int producers = 2, double disturbance = 0.0) {
    testsupport::SyntheticSpec spec;
    spec.days = days;
    spec.seed = seed;
    spec.n_producers = producers;
    spec.disturbance_amp = disturbance;
    const auto field = testsupport::make_synthetic_field(spec);
    const fs::path path = dir / "field.csv";
    std::ofstream out(path);
    write_production_csv(field.history, out);
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("fit-crm happy path writes params and forecast that re-parse") {
    const auto dir = make_temp_dir("cli_fit");
    const auto csv = write_synthetic_csv(dir);
    const int code = run_cli("fit-crm --input " + csv.string() + " --out " + (dir / "out").string() +
                             " --window-len 80 --window-len 110 --forecast-len 40");
    CHECK(code == 0);
    REQUIRE(fs::exists(dir / "out" / "crm_params.json"));
    REQUIRE(fs::exists(dir / "out" / "crm_forecast.csv"));

    CHECK_NOTHROW(crm_parameters_from_json(slurp(dir / "out" / "crm_params.json")));
    std::ifstream fc(dir / "out" / "crm_forecast.csv");
    CHECK_FALSE(parse_forecast_csv(fc).empty());
    fs::remove_all(dir);
}

TEST_CASE("garbled csv exits 2 and leaves no partial outputs") {
    const auto dir = make_temp_dir("cli_garbled");
    const fs::path bad = dir / "bad.csv";
    std::ofstream(bad) << "this,is,not,the,schema\n1,2,3,4,5\n";
    const int code = run_cli("fit-crm --input " + bad.string() + " --out " + (dir / "out").string());
    CHECK(code == 2);
    CHECK_FALSE(fs::exists(dir / "out" / "crm_params.json"));
    CHECK_FALSE(fs::exists(dir / "out" / "crm_forecast.csv"));
    fs::remove_all(dir);
}

TEST_CASE("intervals with a single window length exit 4") {
    const auto dir = make_temp_dir("cli_single");
    const auto csv = write_synthetic_csv(dir);
    const int code = run_cli("fit-crm --input " + csv.string() + " --out " + (dir / "out").string() +
                             " --window-len 80 --intervals");
    CHECK(code == 4);
    fs::remove_all(dir);
}

TEST_CASE("too many blocks for the history exit 5") {
    const auto dir = make_temp_dir("cli_short");
    const auto csv = write_synthetic_csv(dir, 200);
    const int code = run_cli("evaluate --input " + csv.string() + " --out " + (dir / "out").string() +
                             " --forecast-len 100 --iterations 4");
    CHECK(code == 5);
    fs::remove_all(dir);
}

TEST_CASE("forecast command writes future rows with intervals") {
    const auto dir = make_temp_dir("cli_forecast");
    const auto csv = write_synthetic_csv(dir);
    const int code = run_cli("forecast --input " + csv.string() + " --out " + (dir / "out").string() +
                             " --window-len 80 --window-len 110 --forecast-len 20");
    CHECK(code == 0);
    std::ifstream fc(dir / "out" / "forecast.csv");
    const auto rows = parse_forecast_csv(fc);
    REQUIRE(rows.size() == 2 * 20); // two producers x horizon
    for (const auto& r : rows) {
        CHECK(r.method == "crm");
        CHECK(r.lower_m3.has_value());
        CHECK(*r.lower_m3 <= r.point_m3 + 1e-9);
    }
    // all dates lie beyond the observed range
    const Date last_observed = Date::from_ymd(2010, 1, 1) + 299;
    for (const auto& r : rows) CHECK(r.date > last_observed);
    fs::remove_all(dir);
}

TEST_CASE("evolve writes a log and a loadable best pipeline") {
    const auto dir = make_temp_dir("cli_evolve");
    const auto csv = write_synthetic_csv(dir, 260, 11, 1, 12.0);
    const fs::path config = dir / "config.json";
    std::ofstream(config) << R"({
      "evo": {"population_size": 4, "generations": 1, "tournament_size": 2,
               "lag_min": 5, "lag_max": 20, "trees_min": 5, "trees_max": 15,
               "crm_window_lens": [70],
               "crm_fit": {"restarts": 2, "optimizer_max_iters": 40}}
    })";
    const int code = run_cli("evolve --config " + config.string() + " --input " + csv.string() +
                             " --out " + (dir / "out").string() +
                             " --target-well P1 --forecast-len 15 --seed 5");
    CHECK(code == 0);
    std::ifstream log(dir / "out" / "evolution_log.csv");
    const auto rows = parse_evolution_log_csv(log);
    REQUIRE(rows.size() == 2); // generations + 1
    CHECK(rows.back().best_rmse <= rows.front().best_rmse);
    CHECK_NOTHROW(pipeline_from_json(slurp(dir / "out" / "best_pipeline.json")));

    // the saved pipeline drives a forecast run
    const int fc_code = run_cli("forecast --input " + csv.string() + " --out " +
                                (dir / "fc").string() + " --forecast-len 15 --pipeline " +
                                (dir / "out" / "best_pipeline.json").string());
    CHECK(fc_code == 0);
    std::ifstream fc(dir / "fc" / "forecast.csv");
    const auto fc_rows = parse_forecast_csv(fc);
    CHECK(fc_rows.size() == 15);
    for (const auto& r : fc_rows) CHECK(r.method == "pipeline");

    // a horizon that disagrees with the pipeline is a config error
    CHECK(run_cli("forecast --input " + csv.string() + " --out " + (dir / "fc2").string() +
                  " --forecast-len 99 --pipeline " +
                  (dir / "out" / "best_pipeline.json").string()) == 4);
    fs::remove_all(dir);
}

TEST_CASE("evaluate produces metrics for every method and is rerun-identical") {
    const auto dir = make_temp_dir("cli_eval");
    const auto csv = write_synthetic_csv(dir, 300, 13, 2, 10.0);
    const fs::path config = dir / "config.json";
    std::ofstream(config) << R"({
      "forecast_len_days": 25,
      "iterations": 2,
      "window_lens": [60, 80],
      "fit": {"restarts": 2, "optimizer_max_iters": 40},
      "ml": {"lag_w": 15, "learner": {"kind": "rforest", "n_trees": 15, "max_depth": 6}},
      "evo": {"population_size": 4, "generations": 1, "tournament_size": 2,
               "lag_min": 5, "lag_max": 20, "trees_min": 5, "trees_max": 15,
               "crm_window_lens": [60],
               "crm_fit": {"restarts": 2, "optimizer_max_iters": 40}}
    })";
    const std::string base = "evaluate --config " + config.string() + " --input " + csv.string() +
                             " --seed 3 --out ";
    CHECK(run_cli(base + (dir / "a").string()) == 0);
    CHECK(run_cli(base + (dir / "b").string()) == 0);

    std::ifstream metrics(dir / "a" / "metrics.csv");
    const auto rows = parse_metrics_csv(metrics);
    REQUIRE(rows.size() == 6);
    int with_values = 0;
    for (const auto& r : rows)
        if (r.rmse_m3) ++with_values;
    CHECK(with_values >= 3);

    CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "b" / "metrics.csv"));
    CHECK(slurp(dir / "a" / "forecasts.csv") == slurp(dir / "b" / "forecasts.csv"));
    fs::remove_all(dir);
}
