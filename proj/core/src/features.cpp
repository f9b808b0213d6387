#include "oilfield/features.hpp"

#include <cmath>

#include "oilfield/errors.hpp"

namespace oilfield {

namespace {

std::vector<double> dense_column(const WellSeries& well, const OptSeries& col) {
    std::vector<double> out;
    out.reserve(col.size());
    for (const auto& v : col) {
        if (!v)
            throw Error("well '" + well.well_id +
                        "' has missing values; resample the history before building features");
        out.push_back(*v);
    }
    return out;
}

struct Source {
    std::string id;
    std::vector<double> values;
};

// Feature series in their canonical column order: producer oil rates then
// injector rates (in history order), then optional producer pressures.
std::vector<Source> collect_sources(const ProductionHistory& history,
                                    const std::string& target_well,
                                    const LagTransformOptions& options) {
    std::vector<Source> sources;
    for (const auto& well : history.wells) {
        if (!options.joint && well.well_id != target_well) continue;
        if (well.kind == WellKind::Producer)
            sources.push_back({well.well_id, dense_column(well, well.oil_rate)});
    }
    if (options.joint) {
        for (const auto& well : history.wells)
            if (well.kind == WellKind::Injector)
                sources.push_back({well.well_id, dense_column(well, well.injection_rate)});
    }
    if (options.include_pressure) {
        for (const auto& well : history.wells) {
            if (well.kind != WellKind::Producer || !well.has_pressure()) continue;
            if (!options.joint && well.well_id != target_well) continue;
            sources.push_back({well.well_id + ":bhp", dense_column(well, well.downhole_pressure)});
        }
    }
    return sources;
}

} // namespace

LaggedDataset lagged_transform(const ProductionHistory& history, const std::string& target_well,
                               const LagSpec& spec, const LagTransformOptions& options) {
    if (spec.window_w < 1 || spec.horizon_f < 1)
        throw Error("lag spec: window_w and horizon_f must be >= 1");
    const WellSeries* target = history.find(target_well);
    if (!target) throw UnknownWell(target_well);
    if (target->kind != WellKind::Producer)
        throw Error("target well '" + target_well + "' is not a producer");
    if (!history.daily_aligned()) throw Error("lagged_transform: history is not daily-aligned");

    const auto len = static_cast<std::int64_t>(history.size());
    const std::int64_t w = spec.window_w;
    const std::int64_t f = spec.horizon_f;
    if (len < w + f)
        throw SeriesTooShort("history length " + std::to_string(len) + " < window_w + horizon_f = " +
                             std::to_string(w + f));

    const std::vector<Source> sources = collect_sources(history, target_well, options);
    const std::int64_t n_samples = len - w - f + 1;
    const auto n_cols = static_cast<std::int64_t>(sources.size()) * w;

    LaggedDataset ds;
    ds.target_well = target_well;
    ds.features.resize(n_samples, n_cols);
    ds.targets.resize(n_samples, f);
    ds.sample_times.reserve(static_cast<std::size_t>(n_samples));

    const auto target_series = dense_column(*target, target->oil_rate);
    for (std::int64_t s = 0; s < n_samples; ++s) {
        const std::int64_t t = w + s;
        ds.sample_times.push_back(t);
        std::int64_t c = 0;
        for (const auto& src : sources)
            for (std::int64_t k = -w; k < 0; ++k)
                ds.features(s, c++) = src.values[static_cast<std::size_t>(t + k)];
        for (std::int64_t j = 0; j < f; ++j)
            ds.targets(s, j) = target_series[static_cast<std::size_t>(t + j)];
    }

    for (const auto& src : sources)
        for (std::int64_t k = -w; k < 0; ++k)
            ds.feature_labels.push_back({src.id, static_cast<int>(k)});
    for (std::int64_t j = 0; j < f; ++j)
        ds.target_labels.push_back({target_well, static_cast<int>(j)});
    return ds;
}

Eigen::RowVectorXd inference_features(const ProductionHistory& history,
                                      const std::string& target_well, const LagSpec& spec,
                                      const LagTransformOptions& options) {
    const WellSeries* target = history.find(target_well);
    if (!target) throw UnknownWell(target_well);
    if (!history.daily_aligned()) throw Error("inference_features: history is not daily-aligned");
    const auto len = static_cast<std::int64_t>(history.size());
    const std::int64_t w = spec.window_w;
    if (len < w)
        throw SeriesTooShort("history length " + std::to_string(len) + " < window_w = " +
                             std::to_string(w));

    const std::vector<Source> sources = collect_sources(history, target_well, options);
    Eigen::RowVectorXd row(static_cast<Eigen::Index>(sources.size()) * w);
    Eigen::Index c = 0;
    for (const auto& src : sources)
        for (std::int64_t k = -w; k < 0; ++k)
            row(c++) = src.values[static_cast<std::size_t>(len + k)];
    return row;
}

LaggedDataset attach_exogenous(const LaggedDataset& dataset, const std::string& name,
                               const Eigen::MatrixXd& values) {
    if (values.rows() != dataset.features.rows())
        throw RowCountMismatch(dataset.features.rows(), values.rows());

    LaggedDataset out = dataset;
    const auto old_cols = dataset.features.cols();
    out.features.conservativeResize(Eigen::NoChange, old_cols + values.cols());
    out.features.rightCols(values.cols()) = values;
    for (Eigen::Index j = 0; j < values.cols(); ++j)
        out.feature_labels.push_back({name, static_cast<int>(j)});
    return out;
}

Eigen::MatrixXd Scaler::apply(const Eigen::MatrixXd& rows) const {
    Eigen::MatrixXd out = rows;
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        out.col(j) = (out.col(j).array() - mean(j)) / scale(j);
    return out;
}

Eigen::MatrixXd Scaler::invert(const Eigen::MatrixXd& rows) const {
    Eigen::MatrixXd out = rows;
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        out.col(j) = out.col(j).array() * scale(j) + mean(j);
    return out;
}

std::pair<LaggedDataset, Scaler> standardize(const LaggedDataset& dataset) {
    if (dataset.features.rows() == 0) throw EmptyDataset();

    const auto n = static_cast<double>(dataset.features.rows());
    Scaler sc;
    sc.mean = dataset.features.colwise().mean();
    sc.scale.resize(dataset.features.cols());
    for (Eigen::Index j = 0; j < dataset.features.cols(); ++j) {
        const double var = (dataset.features.col(j).array() - sc.mean(j)).square().sum() / n;
        const double sd = std::sqrt(var);
        sc.scale(j) = sd > 0.0 ? sd : 1.0;
    }

    LaggedDataset out = dataset;
    out.features = sc.apply(dataset.features);
    return {std::move(out), std::move(sc)};
}

} // namespace oilfield
