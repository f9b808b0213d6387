#include <benchmark/benchmark.h>

#include "oilfield/crm.hpp"
#include "oilfield/features.hpp"
#include "oilfield/learners.hpp"
#include "oilfield/metrics.hpp"
#include "oilfield/rng.hpp"
#include "support/synthetic.hpp"

using namespace oilfield;

namespace {

ProductionHistory bench_history(std::int64_t days, int producers = 3, int injectors = 2) {
    testsupport::SyntheticSpec spec;
    spec.days = days;
    spec.n_producers = producers;
    spec.n_injectors = injectors;
    spec.seed = 12;
    spec.disturbance_amp = 10.0;
    return testsupport::make_synthetic_field(spec).history;
}

void BM_crm_simulate(benchmark::State& state) {
    const auto field = testsupport::make_recovery_fixture(400);
    const CrmData data = make_crm_data(field.history);
    const Eigen::MatrixXd inj = data.injection.bottomRows(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate(field.truth, inj, std::nullopt, state.range(0)));
    }
}
BENCHMARK(BM_crm_simulate)->Arg(100)->Arg(399);

void BM_crm_fit_window(benchmark::State& state) {
    const auto field = testsupport::make_recovery_fixture(200);
    FitConfig config;
    config.restarts = 1;
    config.optimizer_max_iters = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_window(field.history, MatchWindow{0, 200, 200}, config));
    }
}
BENCHMARK(BM_crm_fit_window)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_dtw(benchmark::State& state) {
    Rng rng(5);
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = rng.uniform(0.0, 100.0);
    for (auto& v : b) v = rng.uniform(0.0, 100.0);
    for (auto _ : state) benchmark::DoNotOptimize(dtw(a, b));
}
BENCHMARK(BM_dtw)->Arg(100)->Arg(400);

void BM_lagged_transform(benchmark::State& state) {
    const auto history = bench_history(state.range(0));
    const LagSpec lag{.window_w = 30, .horizon_f = 10};
    for (auto _ : state) benchmark::DoNotOptimize(lagged_transform(history, "P1", lag));
}
BENCHMARK(BM_lagged_transform)->Arg(365)->Arg(1000);

void BM_forest_train(benchmark::State& state) {
    const auto history = bench_history(600);
    const auto ds = lagged_transform(history, "P1", {.window_w = 30, .horizon_f = 10});
    LearnerSpec spec{.kind = LearnerKind::RandomForest, .max_depth = 10, .min_samples_leaf = 2,
                     .n_trees = static_cast<int>(state.range(0)),
                     .feature_subsample_fraction = 0.5, .seed = 3};
    for (auto _ : state) benchmark::DoNotOptimize(train(spec, ds));
}
BENCHMARK(BM_forest_train)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
