#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>

#include "oilfield/features.hpp"

namespace oilfield {

enum class LearnerKind { Naive, Linear, Ridge, KNearest, DecisionTree, RandomForest };

std::string to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& name);

/// Learner choice plus hyperparameters. Only the fields relevant to `kind`
/// are read; validate() checks the ranges the kind requires.
struct LearnerSpec {
    LearnerKind kind = LearnerKind::Ridge;

    double lambda = 1.0;   // Ridge: >= 0
    int k = 5;             // KNearest: >= 1
    int max_depth = 12;    // trees: >= 1
    int min_samples_leaf = 2;
    int n_trees = 100;     // RandomForest: >= 1
    bool bootstrap = true;
    double feature_subsample_fraction = 1.0; // (0, 1]
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const LearnerSpec&) const = default;
};

/// Immutable trained model; cheap to copy and safe to share across
/// concurrent readers.
class FittedLearner {
public:
    const LearnerSpec& spec() const { return spec_; }
    Eigen::Index input_cols() const { return input_cols_; }
    Eigen::Index output_cols() const { return output_cols_; }

    /// rows.cols() must equal input_cols(); returns rows.rows() x
    /// output_cols() finite values.
    Eigen::MatrixXd predict(const Eigen::MatrixXd& rows) const;

    class Model; // internal

    FittedLearner(LearnerSpec spec, Eigen::Index in, Eigen::Index out,
                  std::shared_ptr<const Model> model);

private:
    LearnerSpec spec_;
    Eigen::Index input_cols_ = 0;
    Eigen::Index output_cols_ = 0;
    std::shared_ptr<const Model> model_;
};

FittedLearner train(const LearnerSpec& spec, const LaggedDataset& dataset);

} // namespace oilfield
