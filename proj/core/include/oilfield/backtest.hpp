#pragma once

#include <string>
#include <vector>

#include "oilfield/crm.hpp"
#include "oilfield/csv.hpp"
#include "oilfield/evolution.hpp"
#include "oilfield/production.hpp"

namespace oilfield {

/// Settings for the in-sample block evaluation: the last
/// iterations * forecast_len days form consecutive blocks; before each
/// block every method is refit on all preceding data and forecasts the
/// block.
struct ProtocolConfig {
    std::vector<std::string> target_wells; // empty => every producer
    std::int64_t forecast_len = 100;
    int iterations = 4;

    std::vector<std::int64_t> window_lens = {45, 60, 90}; // CRM fit windows
    FitConfig fit;
    EvoConfig evo;

    LagSpec ml_lag{.window_w = 30, .horizon_f = 1}; // horizon_f is set per run
    LearnerSpec ml_learner{.kind = LearnerKind::RandomForest,
                           .max_depth = 12,
                           .min_samples_leaf = 2,
                           .n_trees = 100};

    void validate() const;
};

struct EvaluationReport {
    std::vector<MetricsRow> metrics;   // one row per (well, method)
    std::vector<ForecastRow> forecasts; // per block day, well and method
    bool any_success = false;
};

/// Runs the three-method comparison (CRM-only, fixed ML pipeline, evolved
/// hybrid) over the block protocol. Per-well failures become NA metric
/// rows carrying the reason; the report is still produced as long as at
/// least one well succeeds. DTW is reported divided by 1e3, RMSE in m3.
EvaluationReport run_insample_evaluation(const ProductionHistory& history,
                                         const ProtocolConfig& config);

/// CRM block forecast shared by the evaluation protocol and the fit-crm
/// command: one member per window length, each fit on the trailing window
/// of the data before `block_start`, then simulated over
/// [block_start, block_start + block_len) with observed injections.
/// Intervals are t-based when two or more members exist.
struct BlockForecast {
    std::vector<std::string> producers;
    std::vector<std::int64_t> days;
    Eigen::MatrixXd points;          // days x producers
    Eigen::MatrixXd lower, upper;    // valid when with_intervals
    bool with_intervals = false;
};

BlockForecast crm_block_forecast(const ProductionHistory& history, std::int64_t block_start,
                                 std::int64_t block_len,
                                 const std::vector<std::int64_t>& window_lens,
                                 const FitConfig& fit);

} // namespace oilfield
