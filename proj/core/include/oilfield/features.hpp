#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "oilfield/production.hpp"

namespace oilfield {

/// Lagged-transformation shape: w past days as features, f future days as
/// targets.
struct LagSpec {
    int window_w = 30;
    int horizon_f = 10;

    bool operator==(const LagSpec&) const = default;
};

/// Identifies a dataset column: the source series and its day offset
/// relative to the sample time t (negative = lag, non-negative = horizon
/// step). Exogenous columns carry the attachment name as series_id.
struct ColumnLabel {
    std::string series_id;
    int offset = 0;

    bool operator==(const ColumnLabel&) const = default;
};

/// Supervised dataset built from the lagged transformation. Row s
/// corresponds to sample time t = sample_times[s] on the source history's
/// date axis: features hold days [t-w, t) of every input series, targets
/// days [t, t+f) of the target producer.
struct LaggedDataset {
    Eigen::MatrixXd features;
    Eigen::MatrixXd targets;
    std::vector<ColumnLabel> feature_labels;
    std::vector<ColumnLabel> target_labels;
    std::string target_well;
    std::vector<std::int64_t> sample_times;

    Eigen::Index rows() const { return features.rows(); }
};

struct LagTransformOptions {
    bool include_pressure = false; // add producer BHP series to the feature set
    bool joint = true;             // false: only the target well's own series
};

/// Builds the trajectory-matrix dataset: features are lagged values of all
/// producer oil-rate and injector injection-rate series (joint mode),
/// targets the next horizon_f values of the target producer. Samples
/// enumerate every valid t in chronological order.
LaggedDataset lagged_transform(const ProductionHistory& history, const std::string& target_well,
                               const LagSpec& spec, const LagTransformOptions& options = {});

/// Feature row for forecasting the days immediately after the history
/// ends: the last window_w days of every input series, in the same column
/// order lagged_transform produces.
Eigen::RowVectorXd inference_features(const ProductionHistory& history,
                                      const std::string& target_well, const LagSpec& spec,
                                      const LagTransformOptions& options = {});

/// Appends horizon-aligned exogenous columns (values.cols() per sample) to
/// the feature matrix; existing columns are untouched.
LaggedDataset attach_exogenous(const LaggedDataset& dataset, const std::string& name,
                               const Eigen::MatrixXd& values);

/// Per-column affine transform captured by standardize; applying then
/// inverting reproduces the input exactly.
struct Scaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
    Eigen::MatrixXd invert(const Eigen::MatrixXd& rows) const;
};

/// Centers each feature column and divides by its population (divide-by-n)
/// standard deviation; zero-variance columns get scale 1. Targets are
/// untouched.
std::pair<LaggedDataset, Scaler> standardize(const LaggedDataset& dataset);

} // namespace oilfield
