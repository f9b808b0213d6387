#include <doctest.h>

#include "oilfield/errors.hpp"
#include "oilfield/optim.hpp"

using namespace oilfield;

TEST_CASE("projection clamps to the box") {
    FeasibleBox box;
    box.lower = Eigen::VectorXd::Zero(3);
    box.upper = Eigen::VectorXd::Ones(3);
    Eigen::VectorXd x(3);
    x << -1.0, 0.5, 2.0;
    const Eigen::VectorXd p = box.project(x);
    CHECK(p(0) == 0.0);
    CHECK(p(1) == 0.5);
    CHECK(p(2) == 1.0);
}

TEST_CASE("projection enforces the group-sum cap at minimal distance") {
    FeasibleBox box;
    box.lower = Eigen::VectorXd::Zero(3);
    box.upper = Eigen::VectorXd::Ones(3);
    box.sum_constraints.push_back({{0, 1, 2}, 1.0});

    Eigen::VectorXd x(3);
    x << 0.8, 0.8, 0.8;
    const Eigen::VectorXd p = box.project(x);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-9));
    // symmetric input stays symmetric
    CHECK(p(0) == doctest::Approx(p(1)));
    CHECK(p(1) == doctest::Approx(p(2)));

    // already-feasible points are untouched
    Eigen::VectorXd ok(3);
    ok << 0.2, 0.3, 0.4;
    CHECK((box.project(ok) - ok).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("minimize_projected solves a constrained quadratic") {
    // minimize ||x - c||^2 with c outside the feasible set
    FeasibleBox box;
    box.lower = Eigen::VectorXd::Zero(4);
    box.upper = Eigen::VectorXd::Ones(4);
    box.sum_constraints.push_back({{0, 1}, 1.0});

    Eigen::VectorXd c(4);
    c << 0.9, 0.9, -0.5, 0.4;
    const auto f = [&](const Eigen::VectorXd& x) { return (x - c).squaredNorm(); };

    OptimOptions options;
    options.max_iters = 200;
    options.tol = 1e-12;
    const OptimResult result = minimize_projected(f, box, Eigen::VectorXd::Constant(4, 0.25), options);

    // optimum is the projection of c
    const Eigen::VectorXd expected = box.project(c);
    CHECK((result.x - expected).cwiseAbs().maxCoeff() < 1e-5);
    CHECK(result.value <= f(box.project(Eigen::VectorXd::Constant(4, 0.25))) + 1e-12);
}

TEST_CASE("minimize_projected is monotone from the start point") {
    FeasibleBox box;
    box.lower = Eigen::VectorXd::Constant(2, -5.0);
    box.upper = Eigen::VectorXd::Constant(2, 5.0);
    const auto rosenbrock = [](const Eigen::VectorXd& x) {
        const double a = 1.0 - x(0);
        const double b = x(1) - x(0) * x(0);
        return a * a + 100.0 * b * b;
    };
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    OptimOptions options;
    options.max_iters = 500;
    options.tol = 1e-14;
    const OptimResult result = minimize_projected(rosenbrock, box, x0, options);
    CHECK(result.value < rosenbrock(x0));
    CHECK(result.value < 1e-3); // reaches the valley floor
}

TEST_CASE("latin hypercube stratifies every dimension") {
    Rng rng(77);
    const auto points = latin_hypercube(rng, 10, 3);
    REQUIRE(points.size() == 10);
    for (int d = 0; d < 3; ++d) {
        std::vector<bool> stratum(10, false);
        for (const auto& p : points) {
            CHECK(p(d) >= 0.0);
            CHECK(p(d) < 1.0);
            stratum[static_cast<std::size_t>(p(d) * 10.0)] = true;
        }
        for (bool hit : stratum) CHECK(hit); // one sample per stratum
    }
}
