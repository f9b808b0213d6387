#include "oilfield/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "oilfield/errors.hpp"

namespace oilfield {

std::string to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::HistorySource: return "history_source";
        case NodeKind::LagTransform: return "lag_transform";
        case NodeKind::Standardize: return "standardize";
        case NodeKind::CrmNode: return "crm";
        case NodeKind::Learner: return "learner";
        case NodeKind::Ensemble: return "ensemble";
    }
    return "?";
}

namespace {

NodeKind node_kind_from_string(const std::string& name) {
    if (name == "history_source") return NodeKind::HistorySource;
    if (name == "lag_transform") return NodeKind::LagTransform;
    if (name == "standardize") return NodeKind::Standardize;
    if (name == "crm") return NodeKind::CrmNode;
    if (name == "learner") return NodeKind::Learner;
    if (name == "ensemble") return NodeKind::Ensemble;
    throw Error("unknown pipeline node kind '" + name + "'");
}

// Static data type flowing out of a node.
enum class ValueType { History, Dataset, Forecast };

ValueType output_type(NodeKind kind) {
    switch (kind) {
        case NodeKind::HistorySource: return ValueType::History;
        case NodeKind::LagTransform:
        case NodeKind::Standardize: return ValueType::Dataset;
        default: return ValueType::Forecast;
    }
}

} // namespace

const PipelineNode* Pipeline::find(const std::string& id) const {
    for (const auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

// --- JSON ---

namespace {

nlohmann::json learner_params_json(const LearnerSpec& s) {
    nlohmann::json p;
    p["kind"] = to_string(s.kind);
    p["seed"] = s.seed;
    switch (s.kind) {
        case LearnerKind::Ridge: p["lambda"] = s.lambda; break;
        case LearnerKind::KNearest: p["k"] = s.k; break;
        case LearnerKind::DecisionTree:
            p["max_depth"] = s.max_depth;
            p["min_samples_leaf"] = s.min_samples_leaf;
            break;
        case LearnerKind::RandomForest:
            p["n_trees"] = s.n_trees;
            p["max_depth"] = s.max_depth;
            p["min_samples_leaf"] = s.min_samples_leaf;
            p["bootstrap"] = s.bootstrap;
            p["feature_subsample_fraction"] = s.feature_subsample_fraction;
            break;
        default: break;
    }
    return p;
}

LearnerSpec learner_params_from_json(const nlohmann::json& p) {
    LearnerSpec s;
    s.kind = learner_kind_from_string(p.at("kind").get<std::string>());
    s.seed = p.value("seed", std::uint64_t{0});
    s.lambda = p.value("lambda", s.lambda);
    s.k = p.value("k", s.k);
    s.max_depth = p.value("max_depth", s.max_depth);
    s.min_samples_leaf = p.value("min_samples_leaf", s.min_samples_leaf);
    s.n_trees = p.value("n_trees", s.n_trees);
    s.bootstrap = p.value("bootstrap", s.bootstrap);
    s.feature_subsample_fraction =
        p.value("feature_subsample_fraction", s.feature_subsample_fraction);
    return s;
}

nlohmann::json fit_config_json(const FitConfig& c) {
    return {{"min_window_days", c.min_window_days},
            {"optimizer_max_iters", c.optimizer_max_iters},
            {"convergence_tol", c.convergence_tol},
            {"finite_diff_step", c.finite_diff_step},
            {"restarts", c.restarts},
            {"seed", c.seed},
            {"use_bhp", c.use_bhp}};
}

FitConfig fit_config_from_json(const nlohmann::json& j) {
    FitConfig c;
    c.min_window_days = j.value("min_window_days", c.min_window_days);
    c.optimizer_max_iters = j.value("optimizer_max_iters", c.optimizer_max_iters);
    c.convergence_tol = j.value("convergence_tol", c.convergence_tol);
    c.finite_diff_step = j.value("finite_diff_step", c.finite_diff_step);
    c.restarts = j.value("restarts", c.restarts);
    c.seed = j.value("seed", c.seed);
    c.use_bhp = j.value("use_bhp", c.use_bhp);
    return c;
}

nlohmann::json node_to_json(const PipelineNode& n) {
    nlohmann::json j;
    j["id"] = n.id;
    j["kind"] = to_string(n.kind);
    j["inputs"] = n.inputs;
    nlohmann::json params = nlohmann::json::object();
    switch (n.kind) {
        case NodeKind::LagTransform:
            params["window_w"] = n.lag.window_w;
            params["horizon_f"] = n.lag.horizon_f;
            break;
        case NodeKind::CrmNode:
            params["window_lens"] = n.crm_window_lens;
            params["predict_len"] = n.crm_predict_len;
            params["fit"] = fit_config_json(n.crm_fit);
            break;
        case NodeKind::Learner: params = learner_params_json(n.learner); break;
        case NodeKind::Ensemble:
            params["mode"] = n.ensemble == EnsembleMode::Mean ? "mean" : "median";
            break;
        default: break;
    }
    j["params"] = std::move(params);
    return j;
}

PipelineNode node_from_json(const nlohmann::json& j) {
    PipelineNode n;
    n.id = j.at("id").get<std::string>();
    n.kind = node_kind_from_string(j.at("kind").get<std::string>());
    n.inputs = j.value("inputs", std::vector<std::string>{});
    const auto params = j.value("params", nlohmann::json::object());
    switch (n.kind) {
        case NodeKind::LagTransform:
            n.lag.window_w = params.value("window_w", n.lag.window_w);
            n.lag.horizon_f = params.value("horizon_f", n.lag.horizon_f);
            break;
        case NodeKind::CrmNode:
            n.crm_window_lens = params.value("window_lens", std::vector<std::int64_t>{});
            n.crm_predict_len = params.value("predict_len", std::int64_t{0});
            n.crm_fit = fit_config_from_json(params.value("fit", nlohmann::json::object()));
            break;
        case NodeKind::Learner: n.learner = learner_params_from_json(params); break;
        case NodeKind::Ensemble:
            n.ensemble = params.value("mode", std::string("mean")) == "median"
                             ? EnsembleMode::Median
                             : EnsembleMode::Mean;
            break;
        default: break;
    }
    return n;
}

} // namespace

std::string pipeline_to_json(const Pipeline& pipeline) {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : pipeline.nodes) j["nodes"].push_back(node_to_json(n));
    j["output"] = pipeline.output_node;
    j["target_well"] = pipeline.target_well;
    j["horizon_days"] = pipeline.horizon_days;
    return j.dump(2);
}

Pipeline pipeline_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Pipeline p;
    for (const auto& nj : j.at("nodes")) p.nodes.push_back(node_from_json(nj));
    p.output_node = j.at("output").get<std::string>();
    p.target_well = j.at("target_well").get<std::string>();
    p.horizon_days = j.at("horizon_days").get<std::int64_t>();
    return p;
}

// --- validation ---

std::vector<std::string> validate(const Pipeline& pipeline) {
    std::vector<std::string> out;
    const auto complain = [&](std::string msg) { out.push_back(std::move(msg)); };

    if (pipeline.horizon_days < 1) complain("HorizonInvalid: horizon_days must be >= 1");
    if (pipeline.target_well.empty()) complain("TargetMissing: target_well is empty");

    std::set<std::string> ids;
    for (const auto& n : pipeline.nodes) {
        if (n.id.empty()) complain("NodeIdEmpty: a node has an empty id");
        if (!ids.insert(n.id).second) complain("DuplicateNodeId(" + n.id + ")");
    }

    int sources = 0;
    for (const auto& n : pipeline.nodes)
        if (n.kind == NodeKind::HistorySource) ++sources;
    if (sources != 1)
        complain("SourceCount: expected exactly one history_source, found " +
                 std::to_string(sources));

    bool refs_ok = true;
    for (const auto& n : pipeline.nodes)
        for (const auto& in : n.inputs)
            if (!pipeline.find(in)) {
                complain("UnknownInput(" + n.id + " <- " + in + ")");
                refs_ok = false;
            }
    if (!pipeline.find(pipeline.output_node)) {
        complain("UnknownOutput(" + pipeline.output_node + ")");
        refs_ok = false;
    }
    if (!refs_ok || !out.empty()) {
        // Deeper checks need resolvable references; report what we have.
        if (!refs_ok) return out;
    }

    // Cycle check (Kahn).
    {
        std::map<std::string, int> indegree;
        std::map<std::string, std::vector<std::string>> dependents;
        for (const auto& n : pipeline.nodes) indegree[n.id] = static_cast<int>(n.inputs.size());
        for (const auto& n : pipeline.nodes)
            for (const auto& in : n.inputs) dependents[in].push_back(n.id);
        std::vector<std::string> ready;
        for (const auto& [id, deg] : indegree)
            if (deg == 0) ready.push_back(id);
        std::size_t visited = 0;
        while (!ready.empty()) {
            const std::string id = ready.back();
            ready.pop_back();
            ++visited;
            for (const auto& d : dependents[id])
                if (--indegree[d] == 0) ready.push_back(d);
        }
        if (visited != pipeline.nodes.size()) {
            std::string cyclic;
            for (const auto& [id, deg] : indegree)
                if (deg > 0) cyclic += (cyclic.empty() ? "" : ", ") + id;
            complain("CycleDetected(" + cyclic + ")");
            return out;
        }
    }

    const auto type_of = [&](const std::string& id) { return output_type(pipeline.find(id)->kind); };
    const auto expect = [&](const PipelineNode& n, std::size_t slot, ValueType want,
                            const char* what) {
        if (type_of(n.inputs[slot]) != want)
            complain("TypeMismatch(" + n.inputs[slot] + " -> " + n.id + "): expected " + what);
    };

    for (const auto& n : pipeline.nodes) {
        switch (n.kind) {
            case NodeKind::HistorySource:
                if (!n.inputs.empty()) complain("InputCount(" + n.id + "): source takes no inputs");
                break;
            case NodeKind::LagTransform:
                if (n.inputs.size() != 1) {
                    complain("InputCount(" + n.id + "): lag_transform takes exactly one input");
                    break;
                }
                expect(n, 0, ValueType::History, "history");
                if (n.lag.window_w < 1) complain("LagInvalid(" + n.id + "): window_w must be >= 1");
                if (n.lag.horizon_f < 1) complain("LagInvalid(" + n.id + "): horizon_f must be >= 1");
                if (n.lag.horizon_f != pipeline.horizon_days)
                    complain("HorizonMismatch(" + n.id + "): horizon_f " +
                             std::to_string(n.lag.horizon_f) + " != pipeline horizon " +
                             std::to_string(pipeline.horizon_days));
                break;
            case NodeKind::Standardize:
                if (n.inputs.size() != 1) {
                    complain("InputCount(" + n.id + "): standardize takes exactly one input");
                    break;
                }
                expect(n, 0, ValueType::Dataset, "dataset");
                break;
            case NodeKind::CrmNode:
                if (n.inputs.size() != 1) {
                    complain("InputCount(" + n.id + "): crm takes exactly one input");
                    break;
                }
                expect(n, 0, ValueType::History, "history");
                if (n.crm_window_lens.empty())
                    complain("CrmInvalid(" + n.id + "): window_lens is empty");
                for (const auto w : n.crm_window_lens)
                    if (w < n.crm_fit.min_window_days)
                        complain("CrmInvalid(" + n.id + "): window length " + std::to_string(w) +
                                 " below min_window_days");
                break;
            case NodeKind::Learner: {
                if (n.inputs.empty()) {
                    complain("InputCount(" + n.id + "): learner needs a dataset input");
                    break;
                }
                expect(n, 0, ValueType::Dataset, "dataset");
                for (std::size_t s = 1; s < n.inputs.size(); ++s)
                    if (pipeline.find(n.inputs[s])->kind != NodeKind::CrmNode)
                        complain("TypeMismatch(" + n.inputs[s] + " -> " + n.id +
                                 "): exogenous inputs must be crm nodes");
                try {
                    n.learner.validate();
                } catch (const std::exception& e) {
                    complain("LearnerInvalid(" + n.id + "): " + e.what());
                }
                break;
            }
            case NodeKind::Ensemble:
                if (n.inputs.size() < 2) {
                    complain("InputCount(" + n.id + "): ensemble needs >= 2 inputs");
                    break;
                }
                for (std::size_t s = 0; s < n.inputs.size(); ++s)
                    expect(n, s, ValueType::Forecast, "forecast");
                break;
        }
    }

    if (pipeline.find(pipeline.output_node) &&
        output_type(pipeline.find(pipeline.output_node)->kind) != ValueType::Forecast)
        complain("OutputType(" + pipeline.output_node + "): output node must produce a forecast");

    return out;
}

// --- evaluation ---

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t history_fingerprint(const ProductionHistory& h) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    const auto len = h.size();
    hash = fnv1a(hash, &len, sizeof(len));
    for (const auto& w : h.wells) {
        hash = fnv1a(hash, w.well_id.data(), w.well_id.size());
        const int kind = static_cast<int>(w.kind);
        hash = fnv1a(hash, &kind, sizeof(kind));
        const auto mix_col = [&](const OptSeries& col) {
            for (const auto& v : col) {
                const double x = v.value_or(-1.25e308);
                hash = fnv1a(hash, &x, sizeof(x));
            }
        };
        mix_col(w.oil_rate);
        mix_col(w.injection_rate);
        mix_col(w.downhole_pressure);
    }
    return hash;
}

struct DatasetValue {
    LaggedDataset data;
    Eigen::RowVectorXd inference_row;
};

struct Value {
    const ProductionHistory* history = nullptr;
    std::shared_ptr<DatasetValue> dataset;
    std::shared_ptr<Eigen::VectorXd> forecast; // target-well future
    std::shared_ptr<const CrmNodeOutput> crm;
};

// Combined in-sample windowed predictions plus the post-history forecast
// for a CRM block.
std::shared_ptr<const CrmNodeOutput> compute_crm_node(const PipelineNode& node,
                                                      const ProductionHistory& train,
                                                      std::int64_t horizon) {
    const auto out = std::make_shared<CrmNodeOutput>();
    const std::int64_t predict_len =
        node.crm_predict_len > 0 ? node.crm_predict_len : 2 * horizon;

    std::vector<CrmPrediction> members;
    members.reserve(node.crm_window_lens.size());
    for (const auto w : node.crm_window_lens)
        members.push_back(windowed_forecast(train, w, predict_len, node.crm_fit));
    out->producers = members.front().producers;
    const auto np = static_cast<Eigen::Index>(out->producers.size());

    // In-sample: mean over the members covering each day.
    std::map<std::int64_t, std::pair<Eigen::RowVectorXd, int>> by_day;
    for (const auto& m : members)
        for (std::size_t r = 0; r < m.days.size(); ++r) {
            auto it = by_day.find(m.days[r]);
            if (it == by_day.end())
                by_day.emplace(m.days[r],
                               std::make_pair(Eigen::RowVectorXd(m.rates.row(static_cast<Eigen::Index>(r))), 1));
            else {
                it->second.first += m.rates.row(static_cast<Eigen::Index>(r));
                it->second.second += 1;
            }
        }
    out->insample.resize(static_cast<Eigen::Index>(by_day.size()), np);
    Eigen::Index row = 0;
    for (const auto& [day, acc] : by_day) {
        out->insample_days.push_back(day);
        out->insample.row(row++) = acc.first / static_cast<double>(acc.second);
    }

    // Post-history forecast: per member, fit the trailing window, march the
    // state through it, then simulate with injections held at their last
    // observed rates (held pressure makes the BHP term vanish).
    const CrmData data = make_crm_data(train);
    const auto len = static_cast<std::int64_t>(train.size());
    Eigen::MatrixXd future_sum = Eigen::MatrixXd::Zero(horizon, np);
    for (const auto w : node.crm_window_lens) {
        MatchWindow mw;
        mw.train_start = std::max<std::int64_t>(0, len - w);
        mw.train_end = len;
        mw.predict_end = len;
        const CrmParameters params = fit_window(train, mw, node.crm_fit);

        const std::int64_t steps = (mw.train_end - mw.train_start) - 1;
        Eigen::MatrixXd state = params.initial_rates;
        const bool use_bhp = node.crm_fit.use_bhp && data.pressure.has_value();
        if (steps > 0) {
            std::optional<Eigen::MatrixXd> bhp;
            if (use_bhp) bhp = data.pressure->middleRows(mw.train_start, steps + 1);
            state = simulate_from_state(params, state,
                                        data.injection.middleRows(mw.train_start + 1, steps), bhp,
                                        steps)
                        .final_state;
        }
        const Eigen::MatrixXd held =
            data.injection.row(len - 1).colwise().replicate(static_cast<Eigen::Index>(horizon));
        future_sum += simulate_from_state(params, state, held, std::nullopt, horizon).rates;
    }
    out->future = future_sum / static_cast<double>(node.crm_window_lens.size());
    return out;
}

Eigen::Index producer_column(const CrmNodeOutput& crm, const std::string& well) {
    const auto it = std::find(crm.producers.begin(), crm.producers.end(), well);
    if (it == crm.producers.end())
        throw Error("crm output has no producer '" + well + "'");
    return static_cast<Eigen::Index>(it - crm.producers.begin());
}

} // namespace

std::shared_ptr<const CrmNodeOutput> EvalCache::find(const std::string& key) const {
    const std::lock_guard<std::mutex> lock(mutex_);
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : it->second;
}

void EvalCache::store(const std::string& key, std::shared_ptr<const CrmNodeOutput> value) {
    const std::lock_guard<std::mutex> lock(mutex_);
    entries_.emplace(key, std::move(value));
}

Eigen::VectorXd evaluate(const Pipeline& pipeline, const ProductionHistory& train,
                         std::int64_t horizon, EvalCache* cache) {
    if (horizon != pipeline.horizon_days)
        throw ValidationFailed("horizon argument " + std::to_string(horizon) +
                               " != pipeline horizon " + std::to_string(pipeline.horizon_days));
    const auto violations = validate(pipeline);
    if (!violations.empty()) {
        std::string joined;
        for (const auto& v : violations) joined += (joined.empty() ? "" : "; ") + v;
        throw ValidationFailed(joined);
    }

    // Topological order of the subgraph reaching the output node.
    std::vector<const PipelineNode*> order;
    {
        std::set<std::string> done;
        std::vector<std::pair<const PipelineNode*, std::size_t>> stack;
        stack.emplace_back(pipeline.find(pipeline.output_node), 0);
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            if (next < node->inputs.size()) {
                const auto* dep = pipeline.find(node->inputs[next]);
                ++next;
                if (!done.contains(dep->id)) stack.emplace_back(dep, 0);
            } else {
                if (done.insert(node->id).second) order.push_back(node);
                stack.pop_back();
            }
        }
    }

    std::map<std::string, Value> values;
    const std::uint64_t data_hash = history_fingerprint(train);

    for (const auto* node : order) {
        Value value;
        try {
            switch (node->kind) {
                case NodeKind::HistorySource:
                    value.history = &train;
                    break;
                case NodeKind::LagTransform: {
                    const auto& src = *values.at(node->inputs[0]).history;
                    auto dv = std::make_shared<DatasetValue>();
                    dv->data = lagged_transform(src, pipeline.target_well, node->lag);
                    dv->inference_row = inference_features(src, pipeline.target_well, node->lag);
                    value.dataset = std::move(dv);
                    break;
                }
                case NodeKind::Standardize: {
                    const auto& in = *values.at(node->inputs[0]).dataset;
                    auto dv = std::make_shared<DatasetValue>();
                    auto [scaled, scaler] = standardize(in.data);
                    dv->data = std::move(scaled);
                    dv->inference_row = scaler.apply(in.inference_row);
                    value.dataset = std::move(dv);
                    break;
                }
                case NodeKind::CrmNode: {
                    const auto& src = *values.at(node->inputs[0]).history;
                    std::string key;
                    if (cache) {
                        key = node_to_json(*node).dump() + "#" + std::to_string(horizon) + "#" +
                              std::to_string(data_hash);
                        if (auto hit = cache->find(key)) {
                            value.crm = std::move(hit);
                            break;
                        }
                    }
                    value.crm = compute_crm_node(*node, src, horizon);
                    if (cache) cache->store(key, value.crm);
                    break;
                }
                case NodeKind::Learner: {
                    const auto& in = *values.at(node->inputs[0]).dataset;
                    LaggedDataset ds = in.data;
                    Eigen::RowVectorXd inference = in.inference_row;

                    // Restrict samples to those whose whole target span is
                    // covered by every exogenous CRM input, then widen.
                    for (std::size_t s = 1; s < node->inputs.size(); ++s) {
                        const auto& crm = *values.at(node->inputs[s]).crm;
                        const Eigen::Index col = producer_column(crm, pipeline.target_well);
                        std::map<std::int64_t, Eigen::Index> day_row;
                        for (std::size_t r = 0; r < crm.insample_days.size(); ++r)
                            day_row[crm.insample_days[r]] = static_cast<Eigen::Index>(r);

                        const std::int64_t f = ds.targets.cols();
                        std::vector<Eigen::Index> kept;
                        for (Eigen::Index r = 0; r < ds.rows(); ++r) {
                            const std::int64_t t = ds.sample_times[static_cast<std::size_t>(r)];
                            bool covered = true;
                            for (std::int64_t j = 0; j < f && covered; ++j)
                                covered = day_row.contains(t + j);
                            if (covered) kept.push_back(r);
                        }
                        if (kept.empty())
                            throw NotEnoughSamples(
                                "no training samples covered by CRM predictions from '" +
                                node->inputs[s] + "'");

                        LaggedDataset filtered;
                        filtered.target_well = ds.target_well;
                        filtered.feature_labels = ds.feature_labels;
                        filtered.target_labels = ds.target_labels;
                        filtered.features.resize(static_cast<Eigen::Index>(kept.size()),
                                                 ds.features.cols());
                        filtered.targets.resize(static_cast<Eigen::Index>(kept.size()),
                                                ds.targets.cols());
                        for (std::size_t r = 0; r < kept.size(); ++r) {
                            filtered.features.row(static_cast<Eigen::Index>(r)) =
                                ds.features.row(kept[r]);
                            filtered.targets.row(static_cast<Eigen::Index>(r)) =
                                ds.targets.row(kept[r]);
                            filtered.sample_times.push_back(
                                ds.sample_times[static_cast<std::size_t>(kept[r])]);
                        }

                        Eigen::MatrixXd exo(static_cast<Eigen::Index>(kept.size()), f);
                        for (std::size_t r = 0; r < kept.size(); ++r) {
                            const std::int64_t t = filtered.sample_times[r];
                            for (std::int64_t j = 0; j < f; ++j)
                                exo(static_cast<Eigen::Index>(r), j) =
                                    crm.insample(day_row.at(t + j), col);
                        }
                        ds = attach_exogenous(filtered, "crm:" + node->inputs[s], exo);

                        Eigen::RowVectorXd widened(inference.cols() + horizon);
                        widened.head(inference.cols()) = inference;
                        widened.tail(horizon) = crm.future.col(col).transpose();
                        inference = std::move(widened);
                    }

                    const FittedLearner model = oilfield::train(node->learner, ds);
                    const Eigen::MatrixXd prediction = model.predict(inference);
                    value.forecast =
                        std::make_shared<Eigen::VectorXd>(prediction.row(0).transpose());
                    break;
                }
                case NodeKind::Ensemble: {
                    std::vector<Eigen::VectorXd> parts;
                    for (const auto& input : node->inputs) {
                        const Value& v = values.at(input);
                        if (v.forecast) parts.push_back(*v.forecast);
                        else
                            parts.push_back(
                                v.crm->future.col(producer_column(*v.crm, pipeline.target_well)));
                    }
                    Eigen::VectorXd combined(parts.front().size());
                    if (node->ensemble == EnsembleMode::Mean) {
                        combined.setZero();
                        for (const auto& p : parts) combined += p;
                        combined /= static_cast<double>(parts.size());
                    } else {
                        std::vector<double> slot(parts.size());
                        for (Eigen::Index d = 0; d < combined.size(); ++d) {
                            for (std::size_t m = 0; m < parts.size(); ++m) slot[m] = parts[m](d);
                            std::sort(slot.begin(), slot.end());
                            const std::size_t mid = slot.size() / 2;
                            combined(d) = slot.size() % 2 == 1
                                              ? slot[mid]
                                              : 0.5 * (slot[mid - 1] + slot[mid]);
                        }
                    }
                    value.forecast = std::make_shared<Eigen::VectorXd>(std::move(combined));
                    break;
                }
            }
        } catch (const NodeFailed&) {
            throw;
        } catch (const std::exception& e) {
            throw NodeFailed(node->id, e.what());
        }
        values[node->id] = std::move(value);
    }

    const Value& out = values.at(pipeline.output_node);
    if (out.forecast) return *out.forecast;
    return out.crm->future.col(producer_column(*out.crm, pipeline.target_well));
}

// --- templates ---

Pipeline hybrid_template(const std::string& target_well, std::int64_t horizon, const LagSpec& lag,
                         const LearnerSpec& learner, const std::vector<std::int64_t>& window_lens,
                         const FitConfig& crm_fit) {
    Pipeline p;
    p.target_well = target_well;
    p.horizon_days = horizon;

    PipelineNode src{.id = "source", .kind = NodeKind::HistorySource};
    PipelineNode lagn{.id = "lags", .kind = NodeKind::LagTransform, .inputs = {"source"}};
    lagn.lag = lag;
    lagn.lag.horizon_f = static_cast<int>(horizon);
    PipelineNode stdn{.id = "scale", .kind = NodeKind::Standardize, .inputs = {"lags"}};
    PipelineNode crmn{.id = "crm", .kind = NodeKind::CrmNode, .inputs = {"source"}};
    crmn.crm_window_lens = window_lens;
    crmn.crm_fit = crm_fit;
    PipelineNode learn{.id = "model", .kind = NodeKind::Learner, .inputs = {"scale", "crm"}};
    learn.learner = learner;

    p.nodes = {src, lagn, stdn, crmn, learn};
    p.output_node = "model";
    return p;
}

Pipeline ml_template(const std::string& target_well, std::int64_t horizon, const LagSpec& lag,
                     const LearnerSpec& learner, bool with_standardize) {
    Pipeline p;
    p.target_well = target_well;
    p.horizon_days = horizon;

    PipelineNode src{.id = "source", .kind = NodeKind::HistorySource};
    PipelineNode lagn{.id = "lags", .kind = NodeKind::LagTransform, .inputs = {"source"}};
    lagn.lag = lag;
    lagn.lag.horizon_f = static_cast<int>(horizon);
    p.nodes = {src, lagn};
    std::string tail = "lags";
    if (with_standardize) {
        p.nodes.push_back({.id = "scale", .kind = NodeKind::Standardize, .inputs = {"lags"}});
        tail = "scale";
    }
    PipelineNode learn{.id = "model", .kind = NodeKind::Learner, .inputs = {tail}};
    learn.learner = learner;
    p.nodes.push_back(learn);
    p.output_node = "model";
    return p;
}

Pipeline crm_template(const std::string& target_well, std::int64_t horizon,
                      const std::vector<std::int64_t>& window_lens, const FitConfig& crm_fit) {
    Pipeline p;
    p.target_well = target_well;
    p.horizon_days = horizon;
    PipelineNode src{.id = "source", .kind = NodeKind::HistorySource};
    PipelineNode crmn{.id = "crm", .kind = NodeKind::CrmNode, .inputs = {"source"}};
    crmn.crm_window_lens = window_lens;
    crmn.crm_fit = crm_fit;
    p.nodes = {src, crmn};
    p.output_node = "crm";
    return p;
}

} // namespace oilfield
