#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oilfield/metrics.hpp"
#include "oilfield/production.hpp"

namespace oilfield {

/// Per-couple CRMIP parameters: one (gain, time constant) pair per
/// injector-producer couple. Row = injector, column = producer.
struct CrmParameters {
    std::vector<std::string> injectors;
    std::vector<std::string> producers;
    Eigen::MatrixXd gains;         // f, dimensionless, in [0,1], row sums <= 1
    Eigen::MatrixXd taus;          // days, > 0
    std::optional<Eigen::MatrixXd> productivity; // J, m3/(day*bar), >= 0
    Eigen::MatrixXd initial_rates; // q0, m3/day, >= 0

    Eigen::Index n_injectors() const { return gains.rows(); }
    Eigen::Index n_producers() const { return gains.cols(); }

    /// Throws InvalidParameters naming the first violated invariant.
    void check() const;
};

std::string crm_parameters_to_json(const CrmParameters& params);
CrmParameters crm_parameters_from_json(const std::string& text);

/// History-matching window: fit on [train_start, train_end), predict on
/// [train_end, predict_end).
struct MatchWindow {
    std::int64_t train_start = 0;
    std::int64_t train_end = 0;
    std::int64_t predict_end = 0;
};

struct FitConfig {
    int min_window_days = 30;
    int optimizer_max_iters = 200;
    double convergence_tol = 1e-9;
    double finite_diff_step = 1e-6;
    int restarts = 3;
    std::uint64_t seed = 0;
    /// Enables the productivity (BHP) term; requires pressure on every
    /// producer.
    bool use_bhp = false;

    void validate() const;
    bool operator==(const FitConfig&) const = default;
};

/// Result of stepping the recurrence: per-day producer totals plus the
/// final per-couple state, which lets a caller continue the simulation.
struct SimulationResult {
    Eigen::MatrixXd rates;       // horizon x n_producers
    Eigen::MatrixXd final_state; // n_injectors x n_producers
};

/// Steps the CRMIP recurrence for `horizon` days:
///   q_ij(k) = q_ij(k-1) * e^(-1/tau_ij)
///           + (1 - e^(-1/tau_ij)) * (f_ij * I_i(k) - J_ij * tau_ij * dP_j(k))
/// with dP_j(k) the day-over-day BHP change, and the producer rate the sum
/// over its couples. `injections` holds I_i for each simulated day
/// (horizon x n_injectors). `pressures`, when present, holds BHP for the
/// day before the first step plus each simulated day ((horizon+1) x
/// n_producers); when absent the productivity term is dropped.
Eigen::MatrixXd simulate(const CrmParameters& params, const Eigen::MatrixXd& injections,
                         const std::optional<Eigen::MatrixXd>& pressures, std::int64_t horizon);

/// Same recurrence started from an explicit per-couple state instead of
/// params.initial_rates.
SimulationResult simulate_from_state(const CrmParameters& params, const Eigen::MatrixXd& state0,
                                     const Eigen::MatrixXd& injections,
                                     const std::optional<Eigen::MatrixXd>& pressures,
                                     std::int64_t horizon);

/// Dense per-field arrays extracted from an aligned history, in the layout
/// simulate() consumes. Pressures are set only when every producer carries
/// a BHP column.
struct CrmData {
    std::vector<std::string> injectors;
    std::vector<std::string> producers;
    Eigen::MatrixXd injection; // len x n_injectors
    Eigen::MatrixXd oil;       // len x n_producers
    std::optional<Eigen::MatrixXd> pressure; // len x n_producers
};

CrmData make_crm_data(const ProductionHistory& history);

/// History-matching loss: per-producer RMSE between simulated and observed
/// oil rates over [train_start, train_end), combined in quadrature across
/// producers. The simulation starts from params.initial_rates at
/// train_start.
double objective(const CrmParameters& params, const ProductionHistory& history,
                 const MatchWindow& window, bool use_bhp = false);

/// Constrained windowed history matching: bounds plus the per-injector
/// gain-sum cap are enforced by projection, gradients by central finite
/// differences, with config.restarts Latin-hypercube multi-starts (the
/// provided or heuristic init is always start 0, so the result never
/// scores worse than it). Deterministic given config.seed.
CrmParameters fit_window(const ProductionHistory& history, const MatchWindow& window,
                         const FitConfig& config,
                         const std::optional<CrmParameters>& init = std::nullopt);

/// Per-producer predictions over the predict spans of the back-to-back
/// window layout [train W | pred P | train W | pred P | ...]. `days` are
/// indices into the history's date axis, strictly increasing but not
/// necessarily contiguous (train spans carry no predictions).
struct CrmPrediction {
    std::vector<std::string> producers;
    std::vector<std::int64_t> days;
    Eigen::MatrixXd rates; // days.size() x n_producers
};

/// Windowed forecast: fits each train window (warm-starting from the
/// previous solution) and simulates the following predict span with
/// observed injections; a trailing partial predict span is included.
CrmPrediction windowed_forecast(const ProductionHistory& history, std::int64_t train_window_len,
                                std::int64_t predict_len, const FitConfig& config);

/// Point forecast with t-distribution intervals per timestamp and producer.
struct Forecast {
    std::vector<std::string> producers;
    std::vector<std::int64_t> days; // indices into the source date axis
    std::vector<IntervalForecast> per_producer;
};

/// Window-length ensemble: one windowed_forecast member per entry of
/// window_lens; per timestamp the point is the member mean and the
/// interval mean +/- t(0.975, n-1) * s over the members covering that day.
/// Days covered by fewer than two members are dropped.
Forecast ensemble_forecast(const ProductionHistory& history,
                           const std::vector<std::int64_t>& window_lens, std::int64_t predict_len,
                           const FitConfig& config);

} // namespace oilfield
