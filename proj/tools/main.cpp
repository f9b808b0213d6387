#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "oilfield/backtest.hpp"
#include "oilfield/crm.hpp"
#include "oilfield/csv.hpp"
#include "oilfield/errors.hpp"
#include "oilfield/evolution.hpp"
#include "oilfield/pipeline.hpp"
#include "oilfield/production.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oilfield;

namespace {

// Exit codes: 0 ok, 2 input error, 3 optimizer error, 4 configuration
// error, 5 insufficient data.
constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kOptimizerError = 3;
constexpr int kConfigError = 4;
constexpr int kInsufficientData = 5;

struct Settings {
    std::string input_csv;
    std::vector<std::string> target_wells;
    std::int64_t forecast_len = 100;
    int iterations = 4;
    std::vector<std::int64_t> window_lens = {45, 60, 90};
    GapPolicy gap_policy = GapPolicy::LinearInterpolate;
    std::string output_dir = ".";
    std::uint64_t seed = 0;
    bool intervals = false;

    FitConfig fit;
    EvoConfig evo;
    LagSpec ml_lag{.window_w = 30, .horizon_f = 1};
    LearnerSpec ml_learner{.kind = LearnerKind::RandomForest, .max_depth = 12,
                           .min_samples_leaf = 2, .n_trees = 100};

    // forecast command extras
    std::string method = "crm"; // crm | hybrid
    std::string pipeline_path;
};

GapPolicy gap_policy_from_string(const std::string& name) {
    if (name == "zero") return GapPolicy::Zero;
    if (name == "interpolate") return GapPolicy::LinearInterpolate;
    if (name == "fail") return GapPolicy::Fail;
    throw ConfigError("gap_policy must be zero, interpolate or fail (got '" + name + "')");
}

FitConfig fit_from_json(const json& j, FitConfig base) {
    base.min_window_days = j.value("min_window_days", base.min_window_days);
    base.optimizer_max_iters = j.value("optimizer_max_iters", base.optimizer_max_iters);
    base.convergence_tol = j.value("convergence_tol", base.convergence_tol);
    base.finite_diff_step = j.value("finite_diff_step", base.finite_diff_step);
    base.restarts = j.value("restarts", base.restarts);
    base.seed = j.value("seed", base.seed);
    base.use_bhp = j.value("use_bhp", base.use_bhp);
    return base;
}

EvoConfig evo_from_json(const json& j, EvoConfig base) {
    base.population_size = j.value("population_size", base.population_size);
    base.generations = j.value("generations", base.generations);
    base.mutation_rate = j.value("mutation_rate", base.mutation_rate);
    base.crossover_rate = j.value("crossover_rate", base.crossover_rate);
    base.tournament_size = j.value("tournament_size", base.tournament_size);
    base.elitism_count = j.value("elitism_count", base.elitism_count);
    base.validation_len = j.value("validation_len", base.validation_len);
    base.seed = j.value("seed", base.seed);
    base.max_nodes = j.value("max_nodes", base.max_nodes);
    base.lag_min = j.value("lag_min", base.lag_min);
    base.lag_max = j.value("lag_max", base.lag_max);
    base.ridge_lambda_min = j.value("ridge_lambda_min", base.ridge_lambda_min);
    base.ridge_lambda_max = j.value("ridge_lambda_max", base.ridge_lambda_max);
    base.k_min = j.value("k_min", base.k_min);
    base.k_max = j.value("k_max", base.k_max);
    base.depth_min = j.value("depth_min", base.depth_min);
    base.depth_max = j.value("depth_max", base.depth_max);
    base.trees_min = j.value("trees_min", base.trees_min);
    base.trees_max = j.value("trees_max", base.trees_max);
    base.crm_window_lens = j.value("crm_window_lens", base.crm_window_lens);
    if (j.contains("crm_fit")) base.crm_fit = fit_from_json(j.at("crm_fit"), base.crm_fit);
    return base;
}

void apply_config_file(Settings& s, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    s.input_csv = j.value("input_csv", s.input_csv);
    s.target_wells = j.value("target_wells", s.target_wells);
    s.forecast_len = j.value("forecast_len_days", s.forecast_len);
    s.iterations = j.value("iterations", s.iterations);
    s.window_lens = j.value("window_lens", s.window_lens);
    if (j.contains("gap_policy")) s.gap_policy = gap_policy_from_string(j.at("gap_policy"));
    s.output_dir = j.value("output_dir", s.output_dir);
    s.seed = j.value("seed", s.seed);
    s.intervals = j.value("intervals", s.intervals);
    if (j.contains("fit")) s.fit = fit_from_json(j.at("fit"), s.fit);
    if (j.contains("evo")) s.evo = evo_from_json(j.at("evo"), s.evo);
    if (j.contains("ml")) {
        const auto& ml = j.at("ml");
        s.ml_lag.window_w = ml.value("lag_w", s.ml_lag.window_w);
        if (ml.contains("learner")) {
            const auto& lj = ml.at("learner");
            s.ml_learner.kind = learner_kind_from_string(lj.value("kind", to_string(s.ml_learner.kind)));
            s.ml_learner.lambda = lj.value("lambda", s.ml_learner.lambda);
            s.ml_learner.k = lj.value("k", s.ml_learner.k);
            s.ml_learner.max_depth = lj.value("max_depth", s.ml_learner.max_depth);
            s.ml_learner.min_samples_leaf = lj.value("min_samples_leaf", s.ml_learner.min_samples_leaf);
            s.ml_learner.n_trees = lj.value("n_trees", s.ml_learner.n_trees);
        }
    }
}

void finalize(Settings& s) {
    if (s.input_csv.empty()) throw ConfigError("no input CSV given (use --input or the config file)");
    if (s.forecast_len < 1) throw ConfigError("forecast length must be >= 1");
    if (s.iterations < 1) throw ConfigError("iterations must be >= 1");
    if (s.window_lens.empty()) throw ConfigError("window_lens must not be empty");
    // One seed drives every component unless the config pinned them apart.
    s.fit.seed = s.fit.seed != 0 ? s.fit.seed : s.seed;
    s.evo.seed = s.evo.seed != 0 ? s.evo.seed : s.seed;
    s.evo.crm_fit.seed = s.evo.crm_fit.seed != 0 ? s.evo.crm_fit.seed : s.seed;
    s.ml_learner.seed = s.ml_learner.seed != 0 ? s.ml_learner.seed : s.seed;
}

ProductionHistory load_history(const Settings& s) {
    const ProductionHistory parsed = parse_production_csv_file(s.input_csv);
    if (parsed.wells.empty()) throw HistoryTooShort("input CSV holds no observations");
    return resample_daily(parsed, s.gap_policy);
}

void write_atomic(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << content;
    }
    fs::rename(tmp, path);
}

// In-sample CRM predictions, point-only variant used without --intervals:
// per-day mean over the window-length members covering that day.
std::vector<ForecastRow> crm_insample_rows(const ProductionHistory& history, const Settings& s) {
    std::vector<CrmPrediction> members;
    for (const auto w : s.window_lens)
        members.push_back(windowed_forecast(history, w, s.forecast_len, s.fit));

    std::map<std::int64_t, std::pair<Eigen::RowVectorXd, int>> by_day;
    for (const auto& m : members)
        for (std::size_t r = 0; r < m.days.size(); ++r) {
            const auto it = by_day.find(m.days[r]);
            if (it == by_day.end())
                by_day.emplace(m.days[r], std::make_pair(Eigen::RowVectorXd(m.rates.row(
                                              static_cast<Eigen::Index>(r))), 1));
            else {
                it->second.first += m.rates.row(static_cast<Eigen::Index>(r));
                it->second.second += 1;
            }
        }

    std::vector<ForecastRow> rows;
    const auto& producers = members.front().producers;
    for (const auto& [day, acc] : by_day)
        for (std::size_t j = 0; j < producers.size(); ++j)
            rows.push_back({history.date_axis[static_cast<std::size_t>(day)], producers[j], "crm",
                            acc.first(static_cast<Eigen::Index>(j)) / acc.second, std::nullopt,
                            std::nullopt});
    return rows;
}

int cmd_fit_crm(const Settings& s) {
    const ProductionHistory history = load_history(s);
    const auto len = static_cast<std::int64_t>(history.size());

    // Parameters come from the most recent window of the largest length.
    const std::int64_t w = *std::max_element(s.window_lens.begin(), s.window_lens.end());
    if (w > len) throw HistoryTooShort("largest window exceeds the history");
    MatchWindow mw{len - w, len, len};
    const CrmParameters params = fit_window(history, mw, s.fit);

    std::vector<ForecastRow> rows;
    if (s.intervals) {
        if (s.window_lens.size() < 2) throw NeedAtLeastTwoMembers();
        const Forecast fc = ensemble_forecast(history, s.window_lens, s.forecast_len, s.fit);
        for (std::size_t k = 0; k < fc.days.size(); ++k)
            for (std::size_t j = 0; j < fc.producers.size(); ++j)
                rows.push_back({history.date_axis[static_cast<std::size_t>(fc.days[k])],
                                fc.producers[j], "crm", fc.per_producer[j].points[k],
                                fc.per_producer[j].lower[k], fc.per_producer[j].upper[k]});
    } else {
        rows = crm_insample_rows(history, s);
    }

    std::ostringstream csv;
    write_forecast_csv(rows, csv);
    write_atomic(fs::path(s.output_dir) / "crm_params.json", crm_parameters_to_json(params));
    write_atomic(fs::path(s.output_dir) / "crm_forecast.csv", csv.str());
    std::cout << "wrote crm_params.json and crm_forecast.csv to " << s.output_dir << "\n";
    return kOk;
}

int cmd_forecast(const Settings& s) {
    const ProductionHistory history = load_history(s);
    const auto len = static_cast<std::int64_t>(history.size());
    const std::int64_t horizon = s.forecast_len;
    const Date last = history.date_axis.back();

    std::vector<ForecastRow> rows;
    if (!s.pipeline_path.empty() || s.method == "hybrid") {
        Pipeline pipeline;
        if (!s.pipeline_path.empty()) {
            std::ifstream in(s.pipeline_path);
            if (!in) throw Error("cannot open pipeline file '" + s.pipeline_path + "'");
            std::stringstream buf;
            buf << in.rdbuf();
            pipeline = pipeline_from_json(buf.str());
            if (pipeline.horizon_days != horizon)
                throw ConfigError("pipeline horizon " + std::to_string(pipeline.horizon_days) +
                                  " != requested forecast length " + std::to_string(horizon));
        } else {
            std::vector<std::string> targets = s.target_wells;
            if (targets.empty()) targets = history.producer_ids();
            if (targets.size() != 1)
                throw ConfigError("hybrid forecast needs exactly one --target-well");
            LagSpec lag{.window_w = s.ml_lag.window_w, .horizon_f = static_cast<int>(horizon)};
            LearnerSpec learner{.kind = LearnerKind::Ridge, .lambda = 1.0, .seed = s.seed};
            pipeline = hybrid_template(targets.front(), horizon, lag, learner, s.window_lens, s.fit);
        }
        const Eigen::VectorXd fc = evaluate(pipeline, history, horizon);
        for (std::int64_t d = 0; d < horizon; ++d)
            rows.push_back({last + (d + 1), pipeline.target_well,
                            s.pipeline_path.empty() ? "hybrid" : "pipeline", fc(d), std::nullopt,
                            std::nullopt});
    } else if (s.method == "crm") {
        // One member per window length: trailing-window fit, then simulate
        // forward with injections held at their last observed rates.
        const CrmData data = make_crm_data(history);
        std::vector<Eigen::MatrixXd> futures;
        for (const auto w : s.window_lens) {
            if (w > len) throw HistoryTooShort("window exceeds the history");
            MatchWindow mw{len - w, len, len};
            const CrmParameters params = fit_window(history, mw, s.fit);
            Eigen::MatrixXd state = params.initial_rates;
            if (w > 1)
                state = simulate_from_state(params, state,
                                            data.injection.middleRows(mw.train_start + 1, w - 1),
                                            std::nullopt, w - 1)
                            .final_state;
            const Eigen::MatrixXd held =
                data.injection.row(len - 1).colwise().replicate(static_cast<Eigen::Index>(horizon));
            futures.push_back(simulate_from_state(params, state, held, std::nullopt, horizon).rates);
        }
        const bool with_intervals = futures.size() >= 2;
        std::vector<double> values(futures.size());
        for (std::size_t j = 0; j < data.producers.size(); ++j)
            for (std::int64_t d = 0; d < horizon; ++d) {
                for (std::size_t m = 0; m < futures.size(); ++m)
                    values[m] = futures[m](d, static_cast<Eigen::Index>(j));
                ForecastRow row{last + (d + 1), data.producers[j], "crm", mean(values),
                                std::nullopt, std::nullopt};
                if (with_intervals) {
                    const auto [lo, hi] = t_interval(values, 0.95);
                    row.lower_m3 = lo;
                    row.upper_m3 = hi;
                }
                rows.push_back(std::move(row));
            }
    } else {
        throw ConfigError("unknown forecast method '" + s.method + "' (crm or hybrid)");
    }

    std::ostringstream csv;
    write_forecast_csv(rows, csv);
    write_atomic(fs::path(s.output_dir) / "forecast.csv", csv.str());
    std::cout << "wrote forecast.csv to " << s.output_dir << "\n";
    return kOk;
}

int cmd_evolve(const Settings& s) {
    const ProductionHistory history = load_history(s);
    std::vector<std::string> targets = s.target_wells;
    if (targets.empty()) targets = history.producer_ids();
    if (targets.size() != 1) throw ConfigError("evolve needs exactly one --target-well");

    const EvolveResult result = evolve(s.evo, history, targets.front(), s.forecast_len);

    std::ostringstream log_csv;
    write_evolution_log_csv(result.log, log_csv);
    write_atomic(fs::path(s.output_dir) / "evolution_log.csv", log_csv.str());
    write_atomic(fs::path(s.output_dir) / "best_pipeline.json",
                 pipeline_to_json(result.best.pipeline));
    std::cout << "best validation rmse " << format_double(*result.best.fitness) << " ("
              << result.best.id << "); wrote evolution_log.csv and best_pipeline.json to "
              << s.output_dir << "\n";
    return kOk;
}

int cmd_evaluate(const Settings& s) {
    const ProductionHistory history = load_history(s);

    ProtocolConfig protocol;
    protocol.target_wells = s.target_wells;
    protocol.forecast_len = s.forecast_len;
    protocol.iterations = s.iterations;
    protocol.window_lens = s.window_lens;
    protocol.fit = s.fit;
    protocol.evo = s.evo;
    protocol.ml_lag = s.ml_lag;
    protocol.ml_learner = s.ml_learner;

    const EvaluationReport report = run_insample_evaluation(history, protocol);
    if (!report.any_success) {
        std::string first_reason;
        for (const auto& row : report.metrics)
            if (!row.reason.empty()) { first_reason = row.reason; break; }
        throw Error("every well failed: " + first_reason);
    }

    std::ostringstream metrics_csv, forecasts_csv;
    write_metrics_csv(report.metrics, metrics_csv);
    write_forecast_csv(report.forecasts, forecasts_csv);
    write_atomic(fs::path(s.output_dir) / "metrics.csv", metrics_csv.str());
    write_atomic(fs::path(s.output_dir) / "forecasts.csv", forecasts_csv.str());
    std::cout << "wrote metrics.csv and forecasts.csv to " << s.output_dir << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CRM + machine-learning oil production forecasting"};
    app.require_subcommand(1);

    Settings settings;
    std::string config_path;
    std::vector<std::string> flag_wells;
    std::int64_t flag_forecast_len = -1;
    int flag_iterations = -1;
    std::int64_t flag_seed = -1;
    std::string flag_input, flag_out, flag_gap;
    std::vector<std::int64_t> flag_window_lens;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (flags override it)");
        cmd->add_option("--input", flag_input, "production CSV path");
        cmd->add_option("--target-well", flag_wells, "target producer id (repeatable)");
        cmd->add_option("--forecast-len", flag_forecast_len, "forecast length in days");
        cmd->add_option("--iterations", flag_iterations, "number of in-sample blocks");
        cmd->add_option("--seed", flag_seed, "seed for every stochastic component");
        cmd->add_option("--out", flag_out, "output directory");
        cmd->add_option("--window-len", flag_window_lens, "CRM train window length (repeatable)");
        cmd->add_option("--gap-policy", flag_gap, "zero | interpolate | fail");
    };

    bool flag_intervals = false;
    CLI::App* fit_crm = app.add_subcommand("fit-crm", "windowed CRM history matching");
    add_common(fit_crm);
    fit_crm->add_flag("--intervals", flag_intervals,
                      "emit t-distribution intervals (needs >= 2 window lengths)");

    CLI::App* forecast = app.add_subcommand("forecast", "forecast beyond the history end");
    add_common(forecast);
    forecast->add_option("--method", settings.method, "crm | hybrid");
    forecast->add_option("--pipeline", settings.pipeline_path, "pipeline JSON to evaluate");

    CLI::App* evolve_cmd = app.add_subcommand("evolve", "evolutionary pipeline search");
    add_common(evolve_cmd);

    CLI::App* evaluate_cmd =
        app.add_subcommand("evaluate", "in-sample comparison of crm, ml and hybrid");
    add_common(evaluate_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (!config_path.empty()) apply_config_file(settings, config_path);
        if (!flag_input.empty()) settings.input_csv = flag_input;
        if (!flag_wells.empty()) settings.target_wells = flag_wells;
        if (flag_forecast_len >= 0) settings.forecast_len = flag_forecast_len;
        if (flag_iterations >= 0) settings.iterations = flag_iterations;
        if (flag_seed >= 0) settings.seed = static_cast<std::uint64_t>(flag_seed);
        if (!flag_out.empty()) settings.output_dir = flag_out;
        if (!flag_window_lens.empty()) settings.window_lens = flag_window_lens;
        if (!flag_gap.empty()) settings.gap_policy = gap_policy_from_string(flag_gap);
        if (flag_intervals) settings.intervals = true;
        finalize(settings);

        if (fit_crm->parsed()) return cmd_fit_crm(settings);
        if (forecast->parsed()) return cmd_forecast(settings);
        if (evolve_cmd->parsed()) return cmd_evolve(settings);
        if (evaluate_cmd->parsed()) return cmd_evaluate(settings);
        return kConfigError;
    } catch (const MalformedRow& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const DuplicateObservation& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const UnknownWellKind& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const GapFound& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const HistoryTooShort& e) {
        std::cerr << "insufficient data: " << e.what() << "\n";
        return kInsufficientData;
    } catch (const WindowTooShort& e) {
        std::cerr << "insufficient data: " << e.what() << "\n";
        return kInsufficientData;
    } catch (const SeriesTooShort& e) {
        std::cerr << "insufficient data: " << e.what() << "\n";
        return kInsufficientData;
    } catch (const TestTooLong& e) {
        std::cerr << "insufficient data: " << e.what() << "\n";
        return kInsufficientData;
    } catch (const NeedAtLeastTwoMembers& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfigError;
    } catch (const OptimizerDiverged& e) {
        std::cerr << "optimizer error: " << e.what() << "\n";
        return kOptimizerError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOptimizerError;
    }
}
