#include "oilfield/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "oilfield/errors.hpp"
#include "oilfield/parallel.hpp"
#include "oilfield/rng.hpp"

namespace oilfield {

std::string to_string(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::Naive: return "naive";
        case LearnerKind::Linear: return "linear";
        case LearnerKind::Ridge: return "ridge";
        case LearnerKind::KNearest: return "knn";
        case LearnerKind::DecisionTree: return "dtree";
        case LearnerKind::RandomForest: return "rforest";
    }
    return "?";
}

LearnerKind learner_kind_from_string(const std::string& name) {
    if (name == "naive") return LearnerKind::Naive;
    if (name == "linear") return LearnerKind::Linear;
    if (name == "ridge") return LearnerKind::Ridge;
    if (name == "knn") return LearnerKind::KNearest;
    if (name == "dtree") return LearnerKind::DecisionTree;
    if (name == "rforest") return LearnerKind::RandomForest;
    throw Error("unknown learner kind '" + name + "'");
}

void LearnerSpec::validate() const {
    switch (kind) {
        case LearnerKind::Naive:
        case LearnerKind::Linear:
            break;
        case LearnerKind::Ridge:
            if (!(lambda >= 0.0) || !std::isfinite(lambda))
                throw Error("ridge: lambda must be finite and >= 0");
            break;
        case LearnerKind::KNearest:
            if (k < 1) throw Error("knn: k must be >= 1");
            break;
        case LearnerKind::RandomForest:
            if (n_trees < 1) throw Error("rforest: n_trees must be >= 1");
            if (!(feature_subsample_fraction > 0.0 && feature_subsample_fraction <= 1.0))
                throw Error("rforest: feature_subsample_fraction must be in (0, 1]");
            [[fallthrough]];
        case LearnerKind::DecisionTree:
            if (max_depth < 1) throw Error("tree: max_depth must be >= 1");
            if (min_samples_leaf < 1) throw Error("tree: min_samples_leaf must be >= 1");
            break;
    }
}

class FittedLearner::Model {
public:
    virtual ~Model() = default;
    virtual Eigen::MatrixXd predict(const Eigen::MatrixXd& rows) const = 0;
};

FittedLearner::FittedLearner(LearnerSpec spec, Eigen::Index in, Eigen::Index out,
                             std::shared_ptr<const Model> model)
    : spec_(std::move(spec)), input_cols_(in), output_cols_(out), model_(std::move(model)) {}

Eigen::MatrixXd FittedLearner::predict(const Eigen::MatrixXd& rows) const {
    if (rows.cols() != input_cols_) throw DimensionMismatch(input_cols_, rows.cols());
    return model_->predict(rows);
}

namespace {

// --- naive ---

class NaiveModel final : public FittedLearner::Model {
public:
    NaiveModel(Eigen::Index column, Eigen::Index out_cols) : column_(column), out_cols_(out_cols) {}

    Eigen::MatrixXd predict(const Eigen::MatrixXd& rows) const override {
        Eigen::MatrixXd out(rows.rows(), out_cols_);
        for (Eigen::Index j = 0; j < out_cols_; ++j) out.col(j) = rows.col(column_);
        return out;
    }

private:
    Eigen::Index column_;
    Eigen::Index out_cols_;
};

// --- linear / ridge ---

class LinearModel final : public FittedLearner::Model {
public:
    LinearModel(Eigen::MatrixXd coef, Eigen::RowVectorXd intercept)
        : coef_(std::move(coef)), intercept_(std::move(intercept)) {}

    Eigen::MatrixXd predict(const Eigen::MatrixXd& rows) const override {
        return (rows * coef_).rowwise() + intercept_;
    }

private:
    Eigen::MatrixXd coef_;      // input_cols x output_cols
    Eigen::RowVectorXd intercept_;
};

std::shared_ptr<const FittedLearner::Model> fit_linear(const LaggedDataset& ds, double lambda) {
    const auto& x = ds.features;
    const auto& y = ds.targets;
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();

    // Bordered normal equations with unpenalized intercept:
    //   [ n      1'X      ] [b0]   [ 1'y ]
    //   [ X'1  X'X + l*I  ] [b ] = [ X'y ]
    Eigen::MatrixXd gram(p + 1, p + 1);
    gram(0, 0) = static_cast<double>(n);
    gram.block(0, 1, 1, p) = x.colwise().sum();
    gram.block(1, 0, p, 1) = x.colwise().sum().transpose();
    gram.block(1, 1, p, p) = x.transpose() * x;
    gram.block(1, 1, p, p).diagonal().array() += lambda;

    Eigen::MatrixXd rhs(p + 1, y.cols());
    rhs.row(0) = y.colwise().sum();
    rhs.bottomRows(p) = x.transpose() * y;

    Eigen::MatrixXd beta;
    if (lambda > 0.0) {
        beta = gram.ldlt().solve(rhs);
    } else {
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
        if (!lu.isInvertible())
            throw SingularSystem("normal equations are rank-deficient; use ridge with lambda > 0");
        beta = lu.solve(rhs);
    }
    if (!beta.allFinite())
        throw SingularSystem("normal-equation solve produced non-finite coefficients");

    return std::make_shared<LinearModel>(beta.bottomRows(p), beta.row(0));
}

// --- k nearest neighbours ---

class KnnModel final : public FittedLearner::Model {
public:
    KnnModel(Eigen::MatrixXd x, Eigen::MatrixXd y, int k)
        : x_(std::move(x)), y_(std::move(y)), k_(k) {}

    Eigen::MatrixXd predict(const Eigen::MatrixXd& rows) const override {
        Eigen::MatrixXd out(rows.rows(), y_.cols());
        const Eigen::Index n = x_.rows();
        std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n));
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            for (Eigen::Index i = 0; i < n; ++i)
                dist[static_cast<std::size_t>(i)] = {(x_.row(i) - rows.row(r)).squaredNorm(), i};
            // ties broken by lower training-row index
            std::partial_sort(dist.begin(), dist.begin() + k_, dist.end());
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(y_.cols());
            for (int j = 0; j < k_; ++j) acc += y_.row(dist[static_cast<std::size_t>(j)].second);
            out.row(r) = acc / static_cast<double>(k_);
        }
        return out;
    }

private:
    Eigen::MatrixXd x_;
    Eigen::MatrixXd y_;
    int k_;
};

// --- decision tree ---

struct TreeNode {
    int feature = -1; // -1 => leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    Eigen::RowVectorXd value; // leaf prediction
};

struct TreeSettings {
    int max_depth;
    int min_samples_leaf;
    double feature_fraction; // 1.0 => use all features, no rng draws
};

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, TreeSettings settings, Rng rng)
        : x_(x), y_(y), settings_(settings), rng_(rng) {
        y_sq_.resize(static_cast<std::size_t>(y.rows()));
        for (Eigen::Index i = 0; i < y.rows(); ++i)
            y_sq_[static_cast<std::size_t>(i)] = y.row(i).squaredNorm();
    }

    std::vector<TreeNode> build(std::vector<Eigen::Index> samples) {
        nodes_.clear();
        grow(std::move(samples), 0);
        return std::move(nodes_);
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double score = 0.0; // impurity reduction, > 0 when usable
    };

    int grow(std::vector<Eigen::Index> samples, int depth) {
        const int index = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        nodes_[static_cast<std::size_t>(index)].value = column_means(samples);

        const auto n = static_cast<int>(samples.size());
        if (depth >= settings_.max_depth || n < 2 * settings_.min_samples_leaf) return index;

        const Split split = best_split(samples);
        if (split.feature < 0) return index;

        std::vector<Eigen::Index> left, right;
        left.reserve(samples.size());
        right.reserve(samples.size());
        for (const auto s : samples) {
            if (x_(s, split.feature) <= split.threshold) left.push_back(s);
            else right.push_back(s);
        }
        samples.clear();
        samples.shrink_to_fit();

        nodes_[static_cast<std::size_t>(index)].feature = split.feature;
        nodes_[static_cast<std::size_t>(index)].threshold = split.threshold;
        const int l = grow(std::move(left), depth + 1);
        nodes_[static_cast<std::size_t>(index)].left = l;
        const int r = grow(std::move(right), depth + 1);
        nodes_[static_cast<std::size_t>(index)].right = r;
        return index;
    }

    Eigen::RowVectorXd column_means(const std::vector<Eigen::Index>& samples) const {
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(y_.cols());
        for (const auto s : samples) acc += y_.row(s);
        return acc / static_cast<double>(samples.size());
    }

    std::vector<int> candidate_features() {
        const int p = static_cast<int>(x_.cols());
        std::vector<int> features(static_cast<std::size_t>(p));
        std::iota(features.begin(), features.end(), 0);
        if (settings_.feature_fraction >= 1.0) return features;
        const int m = std::max(1, static_cast<int>(std::llround(settings_.feature_fraction * p)));
        // Partial Fisher-Yates, then sort so the scan order (and hence
        // tie-breaking) stays by ascending feature index.
        for (int i = 0; i < m; ++i) {
            const auto j = static_cast<std::size_t>(rng_.uniform_int(i, p - 1));
            std::swap(features[static_cast<std::size_t>(i)], features[j]);
        }
        features.resize(static_cast<std::size_t>(m));
        std::sort(features.begin(), features.end());
        return features;
    }

    // Exhaustive search over midpoints of sorted unique feature values;
    // best total variance (SSE) reduction wins; ties keep the first hit,
    // i.e. lowest (feature, threshold).
    Split best_split(const std::vector<Eigen::Index>& samples) {
        const auto n = static_cast<double>(samples.size());
        const Eigen::RowVectorXd total_sum = [&] {
            Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(y_.cols());
            for (const auto i : samples) s += y_.row(i);
            return s;
        }();
        double total_sq = 0.0;
        for (const auto i : samples) total_sq += y_sq_[static_cast<std::size_t>(i)];
        const double parent_sse = total_sq - total_sum.squaredNorm() / n;
        if (parent_sse <= 0.0) return {};

        Split best;
        std::vector<Eigen::Index> order(samples);
        for (const int f : candidate_features()) {
            std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
                if (x_(a, f) != x_(b, f)) return x_(a, f) < x_(b, f);
                return a < b;
            });
            Eigen::RowVectorXd left_sum = Eigen::RowVectorXd::Zero(y_.cols());
            double left_sq = 0.0;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                const auto s = order[i];
                left_sum += y_.row(s);
                left_sq += y_sq_[static_cast<std::size_t>(s)];
                const double xv = x_(s, f);
                const double xn = x_(order[i + 1], f);
                if (xv == xn) continue; // not a boundary between distinct values
                const auto nl = static_cast<double>(i + 1);
                const double nr = n - nl;
                if (nl < settings_.min_samples_leaf || nr < settings_.min_samples_leaf) continue;
                const double sse_left = left_sq - left_sum.squaredNorm() / nl;
                const Eigen::RowVectorXd right_sum = total_sum - left_sum;
                const double sse_right = (total_sq - left_sq) - right_sum.squaredNorm() / nr;
                const double reduction = parent_sse - sse_left - sse_right;
                if (reduction > best.score) {
                    best.score = reduction;
                    best.feature = f;
                    best.threshold = 0.5 * (xv + xn);
                }
            }
        }
        return best;
    }

    const Eigen::MatrixXd& x_;
    const Eigen::MatrixXd& y_;
    std::vector<double> y_sq_;
    TreeSettings settings_;
    Rng rng_;
    std::vector<TreeNode> nodes_;
};

Eigen::RowVectorXd tree_predict_row(const std::vector<TreeNode>& nodes,
                                    const Eigen::MatrixXd& rows, Eigen::Index r) {
    int i = 0;
    for (;;) {
        const TreeNode& node = nodes[static_cast<std::size_t>(i)];
        if (node.feature < 0) return node.value;
        i = rows(r, node.feature) <= node.threshold ? node.left : node.right;
    }
}

class TreeModel final : public FittedLearner::Model {
public:
    explicit TreeModel(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    Eigen::MatrixXd predict(const Eigen::MatrixXd& rows) const override {
        Eigen::MatrixXd out(rows.rows(), nodes_.front().value.cols());
        for (Eigen::Index r = 0; r < rows.rows(); ++r)
            out.row(r) = tree_predict_row(nodes_, rows, r);
        return out;
    }

private:
    std::vector<TreeNode> nodes_;
};

class ForestModel final : public FittedLearner::Model {
public:
    explicit ForestModel(std::vector<std::vector<TreeNode>> trees) : trees_(std::move(trees)) {}

    Eigen::MatrixXd predict(const Eigen::MatrixXd& rows) const override {
        Eigen::MatrixXd out =
            Eigen::MatrixXd::Zero(rows.rows(), trees_.front().front().value.cols());
        for (const auto& tree : trees_)
            for (Eigen::Index r = 0; r < rows.rows(); ++r)
                out.row(r) += tree_predict_row(tree, rows, r);
        return out / static_cast<double>(trees_.size());
    }

private:
    std::vector<std::vector<TreeNode>> trees_;
};

std::vector<Eigen::Index> all_rows(Eigen::Index n) {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    return rows;
}

} // namespace

FittedLearner train(const LearnerSpec& spec, const LaggedDataset& dataset) {
    spec.validate();
    const Eigen::Index n = dataset.features.rows();
    const Eigen::Index p = dataset.features.cols();
    const Eigen::Index out_cols = dataset.targets.cols();
    if (n < 1) throw NotEnoughSamples("training dataset is empty");
    if (!dataset.features.allFinite() || !dataset.targets.allFinite())
        throw Error("training dataset contains non-finite values");

    std::shared_ptr<const FittedLearner::Model> model;
    switch (spec.kind) {
        case LearnerKind::Naive: {
            Eigen::Index col = -1;
            for (std::size_t j = 0; j < dataset.feature_labels.size(); ++j) {
                const auto& lab = dataset.feature_labels[j];
                if (lab.series_id == dataset.target_well && lab.offset == -1) {
                    col = static_cast<Eigen::Index>(j);
                    break;
                }
            }
            if (col < 0)
                throw Error("naive learner: no lag -1 column for target '" + dataset.target_well + "'");
            model = std::make_shared<NaiveModel>(col, out_cols);
            break;
        }
        case LearnerKind::Linear:
            model = fit_linear(dataset, 0.0);
            break;
        case LearnerKind::Ridge:
            model = fit_linear(dataset, spec.lambda);
            break;
        case LearnerKind::KNearest:
            if (n < spec.k)
                throw NotEnoughSamples("knn: k = " + std::to_string(spec.k) + " exceeds " +
                                       std::to_string(n) + " samples");
            model = std::make_shared<KnnModel>(dataset.features, dataset.targets, spec.k);
            break;
        case LearnerKind::DecisionTree: {
            TreeBuilder builder(dataset.features, dataset.targets,
                                {spec.max_depth, spec.min_samples_leaf, 1.0}, Rng(spec.seed));
            model = std::make_shared<TreeModel>(builder.build(all_rows(n)));
            break;
        }
        case LearnerKind::RandomForest: {
            std::vector<std::vector<TreeNode>> trees(static_cast<std::size_t>(spec.n_trees));
            const Rng base(spec.seed);
            // Per-tree sub-streams make results independent of scheduling.
            parallel_for(trees.size(), [&](std::size_t t) {
                Rng rng = base.fork(t);
                std::vector<Eigen::Index> rows;
                if (spec.bootstrap) {
                    rows.reserve(static_cast<std::size_t>(n));
                    for (Eigen::Index i = 0; i < n; ++i)
                        rows.push_back(static_cast<Eigen::Index>(rng.uniform_int(0, n - 1)));
                } else {
                    rows = all_rows(n);
                }
                TreeBuilder builder(
                    dataset.features, dataset.targets,
                    {spec.max_depth, spec.min_samples_leaf, spec.feature_subsample_fraction}, rng);
                trees[t] = builder.build(std::move(rows));
            });
            model = std::make_shared<ForestModel>(std::move(trees));
            break;
        }
    }
    return FittedLearner(spec, p, out_cols, std::move(model));
}

} // namespace oilfield
