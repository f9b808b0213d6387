#include <doctest.h>

#include <cmath>

#include "oilfield/errors.hpp"
#include "oilfield/learners.hpp"
#include "oilfield/metrics.hpp"
#include "oilfield/rng.hpp"
#include "support/oracles.hpp"

using namespace oilfield;

namespace {

LaggedDataset make_dataset(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                           const std::string& target = "W1") {
    LaggedDataset ds;
    ds.features = x;
    ds.targets = y;
    ds.target_well = target;
    for (Eigen::Index c = 0; c < x.cols(); ++c)
        ds.feature_labels.push_back({target, static_cast<int>(c) - static_cast<int>(x.cols())});
    for (Eigen::Index c = 0; c < y.cols(); ++c)
        ds.target_labels.push_back({target, static_cast<int>(c)});
    for (Eigen::Index r = 0; r < x.rows(); ++r) ds.sample_times.push_back(r + x.cols());
    return ds;
}

LaggedDataset random_dataset(Rng& rng, Eigen::Index n, Eigen::Index p, Eigen::Index out) {
    Eigen::MatrixXd x(n, p), y(n, out);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < p; ++c) x(r, c) = rng.uniform(-3.0, 3.0);
        for (Eigen::Index c = 0; c < out; ++c) y(r, c) = rng.uniform(-5.0, 5.0);
    }
    return make_dataset(x, y);
}

} // namespace

TEST_CASE("ridge with zero lambda reproduces an exact linear relation") {
    Eigen::MatrixXd x(3, 1);
    x << 1, 2, 3;
    Eigen::MatrixXd y = 2.0 * x;
    const auto model = train({.kind = LearnerKind::Ridge, .lambda = 0.0}, make_dataset(x, y));
    const Eigen::MatrixXd pred = model.predict(x);
    for (int i = 0; i < 3; ++i) CHECK(pred(i, 0) == doctest::Approx(y(i, 0)).epsilon(1e-9));

    Eigen::MatrixXd probe(1, 1);
    probe << 10.0;
    CHECK(model.predict(probe)(0, 0) == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("ridge matches the closed-form solution on random systems") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const auto ds = random_dataset(rng, 10, 3, 1);
        for (double lambda : {0.0, 0.1, 1.0, 10.0}) {
            const Eigen::MatrixXd beta = testsupport::ridge_closed_form(ds.features, ds.targets, lambda);
            const auto model = train({.kind = LearnerKind::Ridge, .lambda = lambda}, ds);
            Eigen::MatrixXd probe = Eigen::MatrixXd::Zero(4, 3);
            probe(1, 0) = 1.0;
            probe(2, 1) = 1.0;
            probe(3, 2) = 1.0;
            const Eigen::MatrixXd pred = model.predict(probe);
            // prediction at 0 is the intercept; unit probes add one coefficient each
            CHECK(pred(0, 0) == doctest::Approx(beta(0, 0)).epsilon(1e-8));
            for (int c = 0; c < 3; ++c)
                CHECK(pred(c + 1, 0) - pred(0, 0) == doctest::Approx(beta(c + 1, 0)).epsilon(1e-8));
        }
    }
}

TEST_CASE("linear on rank-deficient features raises SingularSystem") {
    Eigen::MatrixXd x(4, 2);
    x << 1, 2, 2, 4, 3, 6, 4, 8; // second column is 2x the first
    Eigen::MatrixXd y(4, 1);
    y << 1, 2, 3, 4;
    CHECK_THROWS_AS(train({.kind = LearnerKind::Linear}, make_dataset(x, y)), SingularSystem);
    // ridge with positive lambda regularizes it away
    CHECK_NOTHROW(train({.kind = LearnerKind::Ridge, .lambda = 0.5}, make_dataset(x, y)));
}

TEST_CASE("ridge coefficient norm shrinks and predictions approach the mean") {
    Rng rng(37);
    const auto ds = random_dataset(rng, 24, 4, 1);
    Eigen::MatrixXd probe(1, 4);
    for (int c = 0; c < 4; ++c) probe(0, c) = rng.uniform(-2.0, 2.0);

    double prev_norm = 1e300;
    for (double lambda : {0.0, 0.5, 5.0, 50.0, 5e5}) {
        const Eigen::MatrixXd beta = testsupport::ridge_closed_form(ds.features, ds.targets, lambda);
        const double norm = beta.bottomRows(4).norm();
        CHECK(norm <= prev_norm + 1e-12);
        prev_norm = norm;

        const auto model = train({.kind = LearnerKind::Ridge, .lambda = lambda}, ds);
        if (lambda >= 5e5) {
            const double target_mean = ds.targets.col(0).mean();
            CHECK(model.predict(probe)(0, 0) == doctest::Approx(target_mean).epsilon(1e-2));
        }
    }
}

TEST_CASE("naive learner repeats the last lag of the target") {
    Eigen::MatrixXd x(3, 2);
    x << 1, 2, 2, 3, 3, 4;
    Eigen::MatrixXd y(3, 3);
    y.setZero();
    const auto ds = make_dataset(x, y);
    const auto model = train({.kind = LearnerKind::Naive}, ds);
    Eigen::MatrixXd probe(1, 2);
    probe << 7.0, 9.0;
    const Eigen::MatrixXd pred = model.predict(probe);
    REQUIRE(pred.cols() == 3);
    for (int c = 0; c < 3; ++c) CHECK(pred(0, c) == 9.0); // lag -1 column repeated
}

TEST_CASE("knn with k=1 returns the training target at a training point") {
    Rng rng(41);
    const auto ds = random_dataset(rng, 12, 3, 2);
    const auto model = train({.kind = LearnerKind::KNearest, .k = 1}, ds);
    const Eigen::MatrixXd pred = model.predict(ds.features.row(4));
    CHECK(pred(0, 0) == doctest::Approx(ds.targets(4, 0)));
    CHECK(pred(0, 1) == doctest::Approx(ds.targets(4, 1)));
}

TEST_CASE("knn with k=n averages every training target") {
    Rng rng(43);
    const auto ds = random_dataset(rng, 9, 2, 1);
    const auto model = train({.kind = LearnerKind::KNearest, .k = 9}, ds);
    Eigen::MatrixXd probe(1, 2);
    probe << 0.0, 0.0;
    CHECK(model.predict(probe)(0, 0) == doctest::Approx(ds.targets.col(0).mean()).epsilon(1e-12));
    CHECK_THROWS_AS(train({.kind = LearnerKind::KNearest, .k = 10}, ds), NotEnoughSamples);
}

TEST_CASE("decision tree on constant targets predicts the constant") {
    Rng rng(47);
    auto ds = random_dataset(rng, 15, 3, 2);
    ds.targets.setConstant(4.25);
    const auto model = train({.kind = LearnerKind::DecisionTree, .max_depth = 5}, ds);
    const Eigen::MatrixXd pred = model.predict(ds.features);
    CHECK((pred.array() - 4.25).abs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("decision tree training error is non-increasing in depth") {
    Rng rng(53);
    const auto ds = random_dataset(rng, 60, 4, 1);
    double prev = 1e300;
    for (int depth = 1; depth <= 8; ++depth) {
        const auto model =
            train({.kind = LearnerKind::DecisionTree, .max_depth = depth, .min_samples_leaf = 1}, ds);
        const Eigen::MatrixXd pred = model.predict(ds.features);
        const std::vector<double> p(pred.data(), pred.data() + pred.size());
        const std::vector<double> o(ds.targets.data(), ds.targets.data() + ds.targets.size());
        const double err = rmse(p, o);
        CHECK(err <= prev + 1e-12);
        prev = err;
    }
}

TEST_CASE("single-tree forest with no randomness equals the tree") {
    Rng rng(59);
    const auto ds = random_dataset(rng, 30, 5, 2);
    const LearnerSpec tree{.kind = LearnerKind::DecisionTree, .max_depth = 6, .min_samples_leaf = 2,
                           .seed = 99};
    LearnerSpec forest = tree;
    forest.kind = LearnerKind::RandomForest;
    forest.n_trees = 1;
    forest.bootstrap = false;
    forest.feature_subsample_fraction = 1.0;

    const Eigen::MatrixXd a = train(tree, ds).predict(ds.features);
    const Eigen::MatrixXd b = train(forest, ds).predict(ds.features);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forest training is deterministic in the seed") {
    Rng rng(61);
    const auto ds = random_dataset(rng, 40, 4, 1);
    const LearnerSpec spec{.kind = LearnerKind::RandomForest, .max_depth = 6,
                           .min_samples_leaf = 2, .n_trees = 12,
                           .feature_subsample_fraction = 0.6, .seed = 1234};
    Eigen::MatrixXd probe(3, 4);
    probe.setConstant(0.3);
    const Eigen::MatrixXd a = train(spec, ds).predict(probe);
    const Eigen::MatrixXd b = train(spec, ds).predict(probe);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    LearnerSpec other = spec;
    other.seed = 4321;
    const Eigen::MatrixXd c = train(other, ds).predict(probe);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0); // different stream, different trees
}

TEST_CASE("predictions stay finite and dimensions are enforced") {
    Rng rng(67);
    const auto ds = random_dataset(rng, 25, 3, 2);
    for (const LearnerKind kind : {LearnerKind::Linear, LearnerKind::Ridge, LearnerKind::KNearest,
                                   LearnerKind::DecisionTree, LearnerKind::RandomForest}) {
        LearnerSpec spec;
        spec.kind = kind;
        spec.k = 3;
        spec.n_trees = 5;
        const auto model = train(spec, ds);
        CHECK(model.input_cols() == 3);
        CHECK(model.output_cols() == 2);
        Eigen::MatrixXd probe(2, 3);
        probe << 100, -50, 3, 0, 0, 0;
        CHECK(model.predict(probe).allFinite());
        Eigen::MatrixXd bad(1, 4);
        bad.setZero();
        CHECK_THROWS_AS(model.predict(bad), DimensionMismatch);
    }
}

TEST_CASE("empty dataset is rejected") {
    LaggedDataset empty;
    empty.features.resize(0, 2);
    empty.targets.resize(0, 1);
    CHECK_THROWS_AS(train({.kind = LearnerKind::Linear}, empty), NotEnoughSamples);
}
