#include "oilfield/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "oilfield/errors.hpp"
#include "oilfield/metrics.hpp"
#include "oilfield/parallel.hpp"

namespace oilfield {

void ProtocolConfig::validate() const {
    if (forecast_len < 1) throw ConfigError("forecast_len must be >= 1");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (window_lens.empty()) throw ConfigError("window_lens must not be empty");
    fit.validate();
}

BlockForecast crm_block_forecast(const ProductionHistory& history, std::int64_t block_start,
                                 std::int64_t block_len,
                                 const std::vector<std::int64_t>& window_lens,
                                 const FitConfig& fit) {
    const CrmData data = make_crm_data(history);
    if (block_start <= 0 || block_start + block_len > data.oil.rows())
        throw InvalidWindow("crm block outside the history");

    std::vector<std::int64_t> usable;
    for (const auto w : window_lens)
        if (w <= block_start && w >= fit.min_window_days) usable.push_back(w);
    if (usable.empty())
        throw WindowTooShort(block_start, fit.min_window_days);

    std::vector<Eigen::MatrixXd> members(usable.size());
    parallel_for(usable.size(), [&](std::size_t m) {
        const std::int64_t w = usable[m];
        MatchWindow mw{block_start - w, block_start, block_start};
        const CrmParameters params = fit_window(history, mw, fit);

        const std::int64_t steps = w - 1;
        const bool use_bhp = fit.use_bhp && data.pressure.has_value();
        Eigen::MatrixXd state = params.initial_rates;
        if (steps > 0) {
            std::optional<Eigen::MatrixXd> bhp;
            if (use_bhp) bhp = data.pressure->middleRows(mw.train_start, steps + 1);
            state = simulate_from_state(params, state,
                                        data.injection.middleRows(mw.train_start + 1, steps), bhp,
                                        steps)
                        .final_state;
        }
        std::optional<Eigen::MatrixXd> bhp_block;
        if (use_bhp) bhp_block = data.pressure->middleRows(block_start - 1, block_len + 1);
        members[m] = simulate_from_state(params, state,
                                         data.injection.middleRows(block_start, block_len),
                                         bhp_block, block_len)
                         .rates;
    });

    BlockForecast out;
    out.producers = data.producers;
    out.with_intervals = members.size() >= 2;
    const auto np = data.oil.cols();
    out.points.resize(block_len, np);
    if (out.with_intervals) {
        out.lower.resize(block_len, np);
        out.upper.resize(block_len, np);
    }
    std::vector<double> values(members.size());
    for (std::int64_t d = 0; d < block_len; ++d) {
        out.days.push_back(block_start + d);
        for (Eigen::Index j = 0; j < np; ++j) {
            for (std::size_t m = 0; m < members.size(); ++m) values[m] = members[m](d, j);
            out.points(d, j) = mean(values);
            if (out.with_intervals) {
                const auto [lo, hi] = t_interval(values, 0.95);
                out.lower(d, j) = lo;
                out.upper(d, j) = hi;
            }
        }
    }
    return out;
}

namespace {

std::vector<double> observed_block(const CrmData& data, Eigen::Index producer,
                                   std::int64_t start, std::int64_t len) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(len));
    for (std::int64_t d = 0; d < len; ++d) out.push_back(data.oil(start + d, producer));
    return out;
}

// Clamps the search ranges so generated pipelines can actually train on
// fit-split data of the given length.
EvoConfig cap_evo_config(EvoConfig evo, std::int64_t train_len, std::int64_t horizon) {
    const std::int64_t validation = evo.validation_len > 0 ? evo.validation_len : horizon;
    const std::int64_t fit_len = train_len - validation;
    // Keep at least 8 training samples after the lagged transform.
    const auto lag_cap = static_cast<int>(fit_len - horizon - 8);
    evo.lag_max = std::max(evo.lag_min, std::min(evo.lag_max, lag_cap));

    std::vector<std::int64_t> lens;
    for (const auto w : evo.crm_window_lens)
        if (w + 2 * horizon <= fit_len) lens.push_back(w);
    if (lens.empty()) {
        const std::int64_t fallback = fit_len - 2 * horizon;
        if (fallback >= evo.crm_fit.min_window_days) lens.push_back(fallback);
        else lens = evo.crm_window_lens; // CRM members will fail and score +inf
    }
    evo.crm_window_lens = std::move(lens);
    return evo;
}

struct WellOutcome {
    std::optional<double> rmse_mean;
    std::optional<double> dtw_mean;
    std::string reason;
};

} // namespace

EvaluationReport run_insample_evaluation(const ProductionHistory& history,
                                         const ProtocolConfig& config) {
    config.validate();
    if (!history.daily_aligned()) throw Error("evaluation: history is not daily-aligned");
    const CrmData data = make_crm_data(history);
    const auto len = static_cast<std::int64_t>(history.size());
    const std::int64_t span = static_cast<std::int64_t>(config.iterations) * config.forecast_len;
    const std::int64_t first_block = len - span;
    // The earliest block still needs data in front of it to fit on; the
    // ML lag window is capped per block, so only the floor matters here.
    const std::int64_t min_train =
        std::max<std::int64_t>(config.fit.min_window_days, config.forecast_len + 9);
    if (first_block < min_train)
        throw HistoryTooShort("history of " + std::to_string(len) + " days cannot host " +
                              std::to_string(config.iterations) + " blocks of " +
                              std::to_string(config.forecast_len) +
                              " days plus training data in front");

    std::vector<std::string> wells = config.target_wells;
    if (wells.empty()) wells = history.producer_ids();
    for (const auto& w : wells) {
        const WellSeries* ws = history.find(w);
        if (!ws || ws->kind != WellKind::Producer)
            throw ConfigError("target well '" + w + "' is not a producer in the input");
    }
    std::vector<Eigen::Index> well_cols;
    for (const auto& w : wells)
        well_cols.push_back(static_cast<Eigen::Index>(
            std::find(data.producers.begin(), data.producers.end(), w) - data.producers.begin()));

    const std::int64_t F = config.forecast_len;

    // --- CRM method: field-wide, once per block ---
    std::vector<std::optional<BlockForecast>> crm_blocks(static_cast<std::size_t>(config.iterations));
    std::string crm_error;
    for (int b = 0; b < config.iterations; ++b) {
        const std::int64_t start = first_block + b * F;
        try {
            crm_blocks[static_cast<std::size_t>(b)] =
                crm_block_forecast(history, start, F, config.window_lens, config.fit);
        } catch (const std::exception& e) {
            crm_error = e.what();
        }
    }

    // --- per-well ML and hybrid ---
    struct PerWell {
        WellOutcome crm, ml, hybrid;
        std::vector<ForecastRow> rows;
    };
    std::vector<PerWell> outcomes(wells.size());
    EvalCache cache; // shared: CRM blocks are keyed by config + train data

    parallel_for(wells.size(), [&](std::size_t wi) {
        const std::string& well = wells[wi];
        const Eigen::Index col = well_cols[wi];
        PerWell& out = outcomes[wi];

        std::vector<double> crm_rmse, crm_dtw, ml_rmse, ml_dtw, hy_rmse, hy_dtw;

        for (int b = 0; b < config.iterations; ++b) {
            const std::int64_t start = first_block + b * F;
            const std::vector<double> observed = observed_block(data, col, start, F);
            const auto date_at = [&](std::int64_t d) { return history.date_axis[static_cast<std::size_t>(d)]; };

            // CRM rows & metrics.
            if (crm_blocks[static_cast<std::size_t>(b)]) {
                const BlockForecast& bf = *crm_blocks[static_cast<std::size_t>(b)];
                std::vector<double> points;
                for (std::int64_t d = 0; d < F; ++d) {
                    ForecastRow row;
                    row.date = date_at(start + d);
                    row.well_id = well;
                    row.method = "crm";
                    row.point_m3 = bf.points(d, col);
                    if (bf.with_intervals) {
                        row.lower_m3 = bf.lower(d, col);
                        row.upper_m3 = bf.upper(d, col);
                    }
                    points.push_back(row.point_m3);
                    out.rows.push_back(std::move(row));
                }
                crm_rmse.push_back(rmse(points, observed));
                crm_dtw.push_back(dtw(points, observed));
            } else {
                out.crm.reason = crm_error;
            }

            const ProductionHistory train = split(history, len - start).first;

            // Fixed ML baseline.
            try {
                LagSpec lag = config.ml_lag;
                lag.horizon_f = static_cast<int>(F);
                lag.window_w = static_cast<int>(std::min<std::int64_t>(
                    lag.window_w, start - F - 8 > 0 ? start - F - 8 : 1));
                LearnerSpec learner = config.ml_learner;
                const Pipeline ml = ml_template(well, F, lag, learner);
                const Eigen::VectorXd forecast = evaluate(ml, train, F, &cache);
                std::vector<double> points(forecast.data(), forecast.data() + forecast.size());
                ml_rmse.push_back(rmse(points, observed));
                ml_dtw.push_back(dtw(points, observed));
                for (std::int64_t d = 0; d < F; ++d)
                    out.rows.push_back({date_at(start + d), well, "ml", points[static_cast<std::size_t>(d)],
                                        std::nullopt, std::nullopt});
            } catch (const std::exception& e) {
                out.ml.reason = e.what();
            }

            // Evolved hybrid.
            try {
                EvoConfig evo = cap_evo_config(config.evo, start, F);
                const EvolveResult evolved = evolve(evo, train, well, F, &cache);
                const Eigen::VectorXd forecast =
                    evaluate(evolved.best.pipeline, train, F, &cache);
                std::vector<double> points(forecast.data(), forecast.data() + forecast.size());
                hy_rmse.push_back(rmse(points, observed));
                hy_dtw.push_back(dtw(points, observed));
                for (std::int64_t d = 0; d < F; ++d)
                    out.rows.push_back({date_at(start + d), well, "hybrid",
                                        points[static_cast<std::size_t>(d)], std::nullopt,
                                        std::nullopt});
            } catch (const std::exception& e) {
                out.hybrid.reason = e.what();
            }
        }

        const auto finish = [&](WellOutcome& o, const std::vector<double>& r,
                                const std::vector<double>& d) {
            if (r.size() == static_cast<std::size_t>(config.iterations)) {
                o.rmse_mean = mean(r);
                o.dtw_mean = mean(d) / 1e3;
                o.reason.clear();
            } else if (o.reason.empty()) {
                o.reason = "incomplete blocks";
            }
        };
        finish(out.crm, crm_rmse, crm_dtw);
        finish(out.ml, ml_rmse, ml_dtw);
        finish(out.hybrid, hy_rmse, hy_dtw);
    });

    EvaluationReport report;
    for (std::size_t wi = 0; wi < wells.size(); ++wi) {
        const auto add = [&](const char* method, const WellOutcome& o) {
            report.metrics.push_back({wells[wi], method, o.rmse_mean, o.dtw_mean, o.reason});
            if (o.rmse_mean) report.any_success = true;
        };
        add("crm", outcomes[wi].crm);
        add("ml", outcomes[wi].ml);
        add("hybrid", outcomes[wi].hybrid);
        for (const auto& r : outcomes[wi].rows) report.forecasts.push_back(r);
    }
    return report;
}

} // namespace oilfield
