#pragma once

#include <Eigen/Dense>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "oilfield/crm.hpp"
#include "oilfield/features.hpp"
#include "oilfield/learners.hpp"
#include "oilfield/production.hpp"

namespace oilfield {

enum class NodeKind { HistorySource, LagTransform, Standardize, CrmNode, Learner, Ensemble };
enum class EnsembleMode { Mean, Median };

std::string to_string(NodeKind kind);

/// One block of the composite model. Only the parameter group matching
/// `kind` is meaningful.
struct PipelineNode {
    std::string id;
    NodeKind kind = NodeKind::HistorySource;
    std::vector<std::string> inputs;

    LagSpec lag;                          // LagTransform
    LearnerSpec learner;                  // Learner
    EnsembleMode ensemble = EnsembleMode::Mean; // Ensemble
    std::vector<std::int64_t> crm_window_lens;  // CrmNode
    FitConfig crm_fit;                    // CrmNode
    std::int64_t crm_predict_len = 0;     // CrmNode in-sample span; 0 => 2 * horizon

    bool operator==(const PipelineNode&) const = default;
};

/// Composite forecasting model: a DAG of data-source, transform, CRM and
/// learner blocks evaluated end-to-end as one function of the history.
struct Pipeline {
    std::vector<PipelineNode> nodes;
    std::string output_node;
    std::string target_well;
    std::int64_t horizon_days = 0;

    const PipelineNode* find(const std::string& id) const;

    bool operator==(const Pipeline&) const = default;
};

std::string pipeline_to_json(const Pipeline& pipeline);
Pipeline pipeline_from_json(const std::string& text);

/// Structural validation; returns one human-readable violation per
/// problem, empty when evaluate() can run. Total: never throws.
std::vector<std::string> validate(const Pipeline& pipeline);

/// Everything a CRM block feeds downstream: combined in-sample predictions
/// over the windowed predict spans (per producer) plus the post-history
/// point forecast, simulated with injections held at their last observed
/// rates.
struct CrmNodeOutput {
    std::vector<std::string> producers;
    std::vector<std::int64_t> insample_days; // strictly increasing axis indices
    Eigen::MatrixXd insample;                // days x producers
    Eigen::MatrixXd future;                  // horizon x producers
};

/// Optional memo for CrmNode results, keyed by (node config, train data).
/// Evaluation results are identical with or without a cache; sharing one
/// across pipeline evaluations over the same history avoids refitting
/// identical CRM blocks.
class EvalCache {
public:
    std::shared_ptr<const CrmNodeOutput> find(const std::string& key) const;
    void store(const std::string& key, std::shared_ptr<const CrmNodeOutput> value);

private:
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::shared_ptr<const CrmNodeOutput>> entries_;
};

/// Runs the DAG on `train` and returns the horizon-day point forecast for
/// the target well (the days immediately after the last train day).
/// Deterministic given the seeds embedded in the node specs. Throws
/// ValidationFailed, or NodeFailed naming the node that raised.
Eigen::VectorXd evaluate(const Pipeline& pipeline, const ProductionHistory& train,
                         std::int64_t horizon, EvalCache* cache = nullptr);

/// Hybrid layout: HistorySource -> LagTransform -> Standardize plus a CRM
/// block feeding the learner exogenous forecast features.
Pipeline hybrid_template(const std::string& target_well, std::int64_t horizon, const LagSpec& lag,
                         const LearnerSpec& learner, const std::vector<std::int64_t>& window_lens,
                         const FitConfig& crm_fit);

/// Pure data-driven chain: HistorySource -> LagTransform [-> Standardize]
/// -> Learner.
Pipeline ml_template(const std::string& target_well, std::int64_t horizon, const LagSpec& lag,
                     const LearnerSpec& learner, bool with_standardize = true);

/// Physics-only chain: HistorySource -> CrmNode.
Pipeline crm_template(const std::string& target_well, std::int64_t horizon,
                      const std::vector<std::int64_t>& window_lens, const FitConfig& crm_fit);

} // namespace oilfield
