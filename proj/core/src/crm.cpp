#include "oilfield/crm.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "oilfield/errors.hpp"
#include "oilfield/optim.hpp"
#include "oilfield/parallel.hpp"

namespace oilfield {

namespace {

// Internal bounds for the fitted time constants and rate scales.
constexpr double kTauMin = 0.5;    // days
constexpr double kTauMax = 150.0;  // days

} // namespace

void CrmParameters::check() const {
    const auto ni = static_cast<Eigen::Index>(injectors.size());
    const auto np = static_cast<Eigen::Index>(producers.size());
    if (gains.rows() != ni || gains.cols() != np)
        throw InvalidParameters("gains shape does not match injector/producer counts");
    if (taus.rows() != ni || taus.cols() != np) throw InvalidParameters("taus shape mismatch");
    if (initial_rates.rows() != ni || initial_rates.cols() != np)
        throw InvalidParameters("initial_rates shape mismatch");
    if (productivity && (productivity->rows() != ni || productivity->cols() != np))
        throw InvalidParameters("productivity shape mismatch");

    for (Eigen::Index i = 0; i < ni; ++i) {
        double row_sum = 0.0;
        for (Eigen::Index j = 0; j < np; ++j) {
            const double f = gains(i, j);
            if (!std::isfinite(f) || f < 0.0 || f > 1.0)
                throw InvalidParameters("gain f[" + std::to_string(i) + "][" + std::to_string(j) +
                                        "] outside [0, 1]");
            row_sum += f;
            if (!(taus(i, j) > 0.0) || !std::isfinite(taus(i, j)))
                throw InvalidParameters("tau[" + std::to_string(i) + "][" + std::to_string(j) +
                                        "] must be positive");
            if (!(initial_rates(i, j) >= 0.0) || !std::isfinite(initial_rates(i, j)))
                throw InvalidParameters("q0[" + std::to_string(i) + "][" + std::to_string(j) +
                                        "] must be >= 0");
            if (productivity && (!((*productivity)(i, j) >= 0.0) || !std::isfinite((*productivity)(i, j))))
                throw InvalidParameters("J[" + std::to_string(i) + "][" + std::to_string(j) +
                                        "] must be >= 0");
        }
        if (row_sum > 1.0 + 1e-9)
            throw InvalidParameters("gain sum for injector " + std::to_string(i) + " exceeds 1");
    }
}

void FitConfig::validate() const {
    if (min_window_days <= 0 || optimizer_max_iters <= 0 || restarts <= 0)
        throw Error("fit config: counts must be positive");
    if (!(convergence_tol > 0.0) || !(finite_diff_step > 0.0))
        throw Error("fit config: tolerances must be positive");
}

// --- JSON ---

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw Error("crm json: bad matrix row count");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw Error("crm json: bad matrix column count");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

} // namespace

std::string crm_parameters_to_json(const CrmParameters& params) {
    nlohmann::json j;
    j["injectors"] = params.injectors;
    j["producers"] = params.producers;
    j["gains"] = matrix_to_json(params.gains);
    j["taus"] = matrix_to_json(params.taus);
    j["productivity"] = params.productivity ? matrix_to_json(*params.productivity)
                                            : nlohmann::json(nullptr);
    j["initial_rates"] = matrix_to_json(params.initial_rates);
    return j.dump(2);
}

CrmParameters crm_parameters_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    CrmParameters p;
    p.injectors = j.at("injectors").get<std::vector<std::string>>();
    p.producers = j.at("producers").get<std::vector<std::string>>();
    const auto ni = static_cast<Eigen::Index>(p.injectors.size());
    const auto np = static_cast<Eigen::Index>(p.producers.size());
    p.gains = matrix_from_json(j.at("gains"), ni, np);
    p.taus = matrix_from_json(j.at("taus"), ni, np);
    if (!j.at("productivity").is_null())
        p.productivity = matrix_from_json(j.at("productivity"), ni, np);
    p.initial_rates = matrix_from_json(j.at("initial_rates"), ni, np);
    p.check();
    return p;
}

// --- simulation ---

namespace {

// Recurrence core without invariant checks: the optimizer's finite-
// difference probes sit a hair outside the feasible set, and the
// recurrence is well-defined there.
SimulationResult simulate_core(const CrmParameters& params, const Eigen::MatrixXd& state0,
                               const Eigen::MatrixXd& injections,
                               const std::optional<Eigen::MatrixXd>& pressures,
                               std::int64_t horizon) {
    const Eigen::Index ni = params.n_injectors();
    const Eigen::Index np = params.n_producers();
    const Eigen::MatrixXd decay = (-params.taus.array().inverse()).exp().matrix();
    const Eigen::MatrixXd gain_w = (1.0 - decay.array()).matrix();

    SimulationResult result;
    result.rates.resize(horizon, np);
    Eigen::MatrixXd state = state0;

    for (std::int64_t d = 0; d < horizon; ++d) {
        for (Eigen::Index j = 0; j < np; ++j) {
            double total = 0.0;
            for (Eigen::Index i = 0; i < ni; ++i) {
                double input = params.gains(i, j) * injections(d, i);
                if (pressures && params.productivity) {
                    const double dp = (*pressures)(d + 1, j) - (*pressures)(d, j);
                    input -= (*params.productivity)(i, j) * params.taus(i, j) * dp;
                }
                state(i, j) = state(i, j) * decay(i, j) + gain_w(i, j) * input;
                total += state(i, j);
            }
            result.rates(d, j) = total;
        }
    }
    if (!result.rates.allFinite()) throw Error("simulate produced non-finite rates");
    result.final_state = std::move(state);
    return result;
}

} // namespace

SimulationResult simulate_from_state(const CrmParameters& params, const Eigen::MatrixXd& state0,
                                     const Eigen::MatrixXd& injections,
                                     const std::optional<Eigen::MatrixXd>& pressures,
                                     std::int64_t horizon) {
    params.check();
    const Eigen::Index ni = params.n_injectors();
    const Eigen::Index np = params.n_producers();
    if (horizon < 0) throw InvalidWindow("simulate: horizon must be >= 0");
    if (injections.rows() < horizon || injections.cols() != ni)
        throw LengthMismatch("simulate: injections must be horizon x n_injectors");
    if (state0.rows() != ni || state0.cols() != np)
        throw LengthMismatch("simulate: state must be n_injectors x n_producers");
    if (pressures && (pressures->rows() < horizon + 1 || pressures->cols() != np))
        throw LengthMismatch("simulate: pressures must be (horizon+1) x n_producers");
    return simulate_core(params, state0, injections, pressures, horizon);
}

Eigen::MatrixXd simulate(const CrmParameters& params, const Eigen::MatrixXd& injections,
                         const std::optional<Eigen::MatrixXd>& pressures, std::int64_t horizon) {
    return simulate_from_state(params, params.initial_rates, injections, pressures, horizon).rates;
}

// --- data extraction ---

CrmData make_crm_data(const ProductionHistory& history) {
    if (!history.daily_aligned()) throw Error("crm: history is not daily-aligned");
    CrmData data;
    const auto len = static_cast<Eigen::Index>(history.size());

    std::vector<const WellSeries*> producers, injectors;
    for (const auto& w : history.wells)
        (w.kind == WellKind::Producer ? producers : injectors).push_back(&w);
    if (producers.empty()) throw Error("crm: history has no producers");

    data.oil.resize(len, static_cast<Eigen::Index>(producers.size()));
    data.injection.resize(len, static_cast<Eigen::Index>(injectors.size()));

    bool all_pressure = true;
    for (const auto* p : producers) all_pressure = all_pressure && p->has_pressure();

    for (std::size_t j = 0; j < producers.size(); ++j) {
        data.producers.push_back(producers[j]->well_id);
        for (Eigen::Index t = 0; t < len; ++t) {
            const auto& v = producers[j]->oil_rate[static_cast<std::size_t>(t)];
            if (!v) throw Error("crm: missing oil rate for well '" + producers[j]->well_id +
                                "'; resample the history first");
            data.oil(t, static_cast<Eigen::Index>(j)) = *v;
        }
    }
    for (std::size_t i = 0; i < injectors.size(); ++i) {
        data.injectors.push_back(injectors[i]->well_id);
        for (Eigen::Index t = 0; t < len; ++t) {
            const auto& v = injectors[i]->injection_rate[static_cast<std::size_t>(t)];
            if (!v) throw Error("crm: missing injection rate for well '" + injectors[i]->well_id +
                                "'; resample the history first");
            data.injection(t, static_cast<Eigen::Index>(i)) = *v;
        }
    }
    if (all_pressure) {
        Eigen::MatrixXd bhp(len, static_cast<Eigen::Index>(producers.size()));
        bool complete = true;
        for (std::size_t j = 0; j < producers.size() && complete; ++j)
            for (Eigen::Index t = 0; t < len; ++t) {
                const auto& v = producers[j]->downhole_pressure[static_cast<std::size_t>(t)];
                if (!v) { complete = false; break; }
                bhp(t, static_cast<Eigen::Index>(j)) = *v;
            }
        if (complete) data.pressure = std::move(bhp);
    }
    return data;
}

// --- objective ---

namespace {

void check_window(const MatchWindow& w, std::int64_t len) {
    if (w.train_start < 0 || w.train_start >= w.train_end || w.train_end > w.predict_end ||
        w.predict_end > len)
        throw InvalidWindow("window [" + std::to_string(w.train_start) + ", " +
                            std::to_string(w.train_end) + ", " + std::to_string(w.predict_end) +
                            ") invalid for history of length " + std::to_string(len));
}

// Simulated producer rates over [train_start, train_end): day train_start
// carries the initial state, later days step the recurrence with observed
// injections (and BHP when enabled).
Eigen::MatrixXd window_fit_values(const CrmParameters& params, const CrmData& data,
                                  const MatchWindow& w, bool use_bhp) {
    const std::int64_t steps = w.train_end - w.train_start - 1;
    const Eigen::MatrixXd inj =
        data.injection.middleRows(w.train_start + 1, std::max<std::int64_t>(steps, 0));
    std::optional<Eigen::MatrixXd> bhp;
    if (use_bhp && data.pressure)
        bhp = data.pressure->middleRows(w.train_start, std::max<std::int64_t>(steps, 0) + 1);

    Eigen::MatrixXd values(w.train_end - w.train_start, data.oil.cols());
    values.row(0) = params.initial_rates.colwise().sum();
    if (steps > 0) {
        const auto sim = simulate_core(params, params.initial_rates, inj, bhp, steps);
        values.bottomRows(steps) = sim.rates;
    }
    return values;
}

double objective_impl(const CrmParameters& params, const CrmData& data, const MatchWindow& w,
                      bool use_bhp) {
    const Eigen::MatrixXd sim = window_fit_values(params, data, w, use_bhp);
    const Eigen::MatrixXd obs = data.oil.middleRows(w.train_start, w.train_end - w.train_start);
    const auto n = static_cast<double>(sim.rows());
    double acc = 0.0;
    for (Eigen::Index j = 0; j < sim.cols(); ++j)
        acc += (sim.col(j) - obs.col(j)).squaredNorm() / n;
    return std::sqrt(acc);
}

} // namespace

double objective(const CrmParameters& params, const ProductionHistory& history,
                 const MatchWindow& window, bool use_bhp) {
    const CrmData data = make_crm_data(history);
    check_window(window, data.oil.rows());
    params.check();
    return objective_impl(params, data, window, use_bhp);
}

// --- fitting ---

namespace {

// Mapping between CrmParameters and the optimizer's normalized vector:
// [gains | taus scaled to [0,1] | q0 scaled | J scaled (optional)].
struct ParamCodec {
    Eigen::Index ni = 0, np = 0;
    bool with_j = false;
    Eigen::VectorXd q0_scale; // per producer
    double j_scale = 1.0;

    Eigen::Index size() const { return (with_j ? 4 : 3) * ni * np; }

    Eigen::Index idx(int block, Eigen::Index i, Eigen::Index j) const {
        return block * ni * np + i * np + j;
    }

    Eigen::VectorXd encode(const CrmParameters& p) const {
        Eigen::VectorXd x(size());
        for (Eigen::Index i = 0; i < ni; ++i)
            for (Eigen::Index j = 0; j < np; ++j) {
                x(idx(0, i, j)) = p.gains(i, j);
                x(idx(1, i, j)) = (p.taus(i, j) - kTauMin) / (kTauMax - kTauMin);
                x(idx(2, i, j)) = p.initial_rates(i, j) / q0_scale(j);
                if (with_j) x(idx(3, i, j)) = p.productivity ? (*p.productivity)(i, j) / j_scale : 0.0;
            }
        return x;
    }

    CrmParameters decode(const Eigen::VectorXd& x, const std::vector<std::string>& injectors,
                         const std::vector<std::string>& producers) const {
        CrmParameters p;
        p.injectors = injectors;
        p.producers = producers;
        p.gains.resize(ni, np);
        p.taus.resize(ni, np);
        p.initial_rates.resize(ni, np);
        if (with_j) p.productivity = Eigen::MatrixXd(ni, np);
        for (Eigen::Index i = 0; i < ni; ++i)
            for (Eigen::Index j = 0; j < np; ++j) {
                p.gains(i, j) = x(idx(0, i, j));
                p.taus(i, j) = kTauMin + x(idx(1, i, j)) * (kTauMax - kTauMin);
                p.initial_rates(i, j) = x(idx(2, i, j)) * q0_scale(j);
                if (with_j) (*p.productivity)(i, j) = x(idx(3, i, j)) * j_scale;
            }
        return p;
    }

    FeasibleBox feasible() const {
        FeasibleBox box;
        box.lower = Eigen::VectorXd::Zero(size());
        box.upper = Eigen::VectorXd::Ones(size());
        for (Eigen::Index i = 0; i < ni; ++i) {
            SumConstraint c;
            c.cap = 1.0;
            for (Eigen::Index j = 0; j < np; ++j)
                c.indices.push_back(static_cast<int>(idx(0, i, j)));
            box.sum_constraints.push_back(std::move(c));
        }
        return box;
    }
};

CrmParameters default_init(const CrmData& data, const MatchWindow& w, bool with_j) {
    const Eigen::Index ni = data.injection.cols();
    const Eigen::Index np = data.oil.cols();
    CrmParameters p;
    p.injectors = data.injectors;
    p.producers = data.producers;
    p.gains = Eigen::MatrixXd::Constant(ni, np, 0.5 / static_cast<double>(np));
    p.taus = Eigen::MatrixXd::Constant(ni, np, 20.0);
    p.initial_rates.resize(ni, np);
    // Window-start rate split equally among the connected injectors.
    for (Eigen::Index j = 0; j < np; ++j)
        p.initial_rates.col(j).setConstant(data.oil(w.train_start, j) / static_cast<double>(ni));
    if (with_j) p.productivity = Eigen::MatrixXd::Zero(ni, np);
    return p;
}

} // namespace

CrmParameters fit_window(const ProductionHistory& history, const MatchWindow& window,
                         const FitConfig& config, const std::optional<CrmParameters>& init) {
    config.validate();
    const CrmData data = make_crm_data(history);
    check_window(window, data.oil.rows());
    const std::int64_t window_len = window.train_end - window.train_start;
    if (window_len < config.min_window_days)
        throw WindowTooShort(window_len, config.min_window_days);

    const bool use_bhp = config.use_bhp && data.pressure.has_value();
    const Eigen::Index ni = data.injection.cols();
    const Eigen::Index np = data.oil.cols();
    if (ni == 0)
        throw Error("crm fit: history has no injectors");

    ParamCodec codec;
    codec.ni = ni;
    codec.np = np;
    codec.with_j = use_bhp;
    codec.q0_scale.resize(np);
    const Eigen::MatrixXd obs = data.oil.middleRows(window.train_start, window_len);
    for (Eigen::Index j = 0; j < np; ++j)
        codec.q0_scale(j) = std::max(1.0, 2.0 * obs.col(j).maxCoeff());
    if (use_bhp) {
        // Size the J axis so a full-scale productivity term moves rates by
        // about twice their observed range.
        const Eigen::MatrixXd bhp = data.pressure->middleRows(window.train_start, window_len);
        double max_dp = 0.0;
        for (Eigen::Index t = 1; t < bhp.rows(); ++t)
            max_dp = std::max(max_dp, (bhp.row(t) - bhp.row(t - 1)).cwiseAbs().maxCoeff());
        const double max_rate = std::max(1.0, obs.maxCoeff());
        codec.j_scale = 2.0 * max_rate / (std::max(max_dp, 1e-3) * kTauMax);
    }

    const FeasibleBox feasible = codec.feasible();
    const auto eval = [&](const Eigen::VectorXd& x) {
        return objective_impl(codec.decode(x, data.injectors, data.producers), data, window, use_bhp);
    };

    OptimOptions opt;
    opt.max_iters = config.optimizer_max_iters;
    opt.tol = config.convergence_tol;
    opt.fd_step = config.finite_diff_step;

    // Start 0 is the provided (or heuristic) init; the rest are Latin-
    // hypercube draws with the heuristic q0.
    CrmParameters init_params = init ? *init : default_init(data, window, use_bhp);
    init_params.check();
    std::vector<Eigen::VectorXd> starts;
    starts.push_back(feasible.project(codec.encode(init_params)));
    if (config.restarts > 1) {
        Rng rng(config.seed);
        const auto lhs = latin_hypercube(rng, config.restarts - 1, static_cast<int>(codec.size()));
        const Eigen::VectorXd q0_default = starts.front().segment(2 * ni * np, ni * np);
        for (auto point : lhs) {
            point.segment(2 * ni * np, ni * np) = q0_default;
            starts.push_back(feasible.project(std::move(point)));
        }
    }

    std::vector<OptimResult> results(starts.size());
    parallel_for(starts.size(), [&](std::size_t s) {
        results[s] = minimize_projected(eval, feasible, starts[s], opt);
    });

    std::size_t best = 0;
    for (std::size_t s = 1; s < results.size(); ++s)
        if (results[s].value < results[best].value) best = s;

    CrmParameters fitted = codec.decode(results[best].x, data.injectors, data.producers);
    fitted.check();
    return fitted;
}

// --- windowed forecasting ---

CrmPrediction windowed_forecast(const ProductionHistory& history, std::int64_t train_window_len,
                                std::int64_t predict_len, const FitConfig& config) {
    config.validate();
    const CrmData data = make_crm_data(history);
    const auto len = static_cast<std::int64_t>(history.size());
    if (predict_len <= 0) throw InvalidWindow("windowed forecast: predict_len must be positive");
    if (train_window_len < config.min_window_days)
        throw WindowTooShort(train_window_len, config.min_window_days);
    if (len < train_window_len + predict_len)
        throw InvalidWindow("windowed forecast: history shorter than one train+predict window");

    CrmPrediction out;
    out.producers = data.producers;
    std::vector<Eigen::RowVectorXd> rows;

    std::optional<CrmParameters> warm;
    std::int64_t pos = 0;
    while (pos + train_window_len < len) {
        MatchWindow w;
        w.train_start = pos;
        w.train_end = pos + train_window_len;
        w.predict_end = std::min(w.train_end + predict_len, len);

        const CrmParameters params = fit_window(history, w, config, warm);
        warm = params;

        // March the state through the train window, then predict.
        const std::int64_t train_steps = train_window_len - 1;
        const std::int64_t pred_steps = w.predict_end - w.train_end;
        Eigen::MatrixXd state = params.initial_rates;
        const bool use_bhp = config.use_bhp && data.pressure.has_value();
        if (train_steps > 0) {
            std::optional<Eigen::MatrixXd> bhp;
            if (use_bhp) bhp = data.pressure->middleRows(w.train_start, train_steps + 1);
            state = simulate_from_state(params, state,
                                        data.injection.middleRows(w.train_start + 1, train_steps),
                                        bhp, train_steps)
                        .final_state;
        }
        std::optional<Eigen::MatrixXd> bhp_pred;
        if (use_bhp) bhp_pred = data.pressure->middleRows(w.train_end - 1, pred_steps + 1);
        const auto sim = simulate_from_state(
            params, state, data.injection.middleRows(w.train_end, pred_steps), bhp_pred, pred_steps);

        for (std::int64_t d = 0; d < pred_steps; ++d) {
            out.days.push_back(w.train_end + d);
            rows.emplace_back(sim.rates.row(d));
        }
        pos += train_window_len + predict_len;
    }

    out.rates.resize(static_cast<Eigen::Index>(rows.size()), data.oil.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        out.rates.row(static_cast<Eigen::Index>(r)) = rows[r];
    return out;
}

Forecast ensemble_forecast(const ProductionHistory& history,
                           const std::vector<std::int64_t>& window_lens, std::int64_t predict_len,
                           const FitConfig& config) {
    if (window_lens.size() < 2) throw NeedAtLeastTwoMembers();

    std::vector<CrmPrediction> members(window_lens.size());
    parallel_for(window_lens.size(), [&](std::size_t m) {
        members[m] = windowed_forecast(history, window_lens[m], predict_len, config);
    });

    // Per-day membership: a day enters the ensemble when at least two
    // members predicted it.
    std::map<std::int64_t, std::vector<std::size_t>> day_members;
    std::vector<std::map<std::int64_t, Eigen::Index>> day_row(members.size());
    for (std::size_t m = 0; m < members.size(); ++m)
        for (std::size_t r = 0; r < members[m].days.size(); ++r) {
            day_members[members[m].days[r]].push_back(m);
            day_row[m][members[m].days[r]] = static_cast<Eigen::Index>(r);
        }

    Forecast fc;
    fc.producers = members.front().producers;
    const auto np = static_cast<std::size_t>(members.front().rates.cols());
    fc.per_producer.resize(np);

    for (const auto& [day, mlist] : day_members) {
        if (mlist.size() < 2) continue;
        fc.days.push_back(day);
        for (std::size_t j = 0; j < np; ++j) {
            std::vector<double> values;
            values.reserve(mlist.size());
            for (const auto m : mlist)
                values.push_back(members[m].rates(day_row[m].at(day), static_cast<Eigen::Index>(j)));
            const auto [lo, hi] = t_interval(values, 0.95);
            auto& ip = fc.per_producer[j];
            ip.points.push_back(mean(values));
            ip.lower.push_back(lo);
            ip.upper.push_back(hi);
        }
    }
    return fc;
}

} // namespace oilfield
