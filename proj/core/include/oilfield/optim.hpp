#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "oilfield/rng.hpp"

namespace oilfield {

/// Unit-coefficient linear inequality sum_{i in indices} x_i <= cap over a
/// disjoint index group.
struct SumConstraint {
    std::vector<int> indices;
    double cap = 1.0;
};

/// Feasible set: box bounds plus disjoint group-sum caps.
struct FeasibleBox {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::vector<SumConstraint> sum_constraints;

    /// Exact Euclidean projection onto the set (clamp + per-group capped
    /// simplex projection via bisection on the Lagrange multiplier).
    Eigen::VectorXd project(Eigen::VectorXd x) const;
};

struct OptimOptions {
    int max_iters = 200;
    double tol = 1e-9;      // relative objective-decrease stopping tolerance
    double fd_step = 1e-6;  // central finite-difference step
};

struct OptimResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Projected-gradient descent with spectral (Barzilai-Borwein) step sizes
/// and an Armijo backtracking safeguard. Gradients come from central
/// finite differences, so the objective only needs to be evaluable.
/// Monotone: the returned value never exceeds objective(project(x0)).
/// Throws OptimizerDiverged if the objective turns non-finite.
OptimResult minimize_projected(const std::function<double(const Eigen::VectorXd&)>& objective,
                               const FeasibleBox& feasible, const Eigen::VectorXd& x0,
                               const OptimOptions& options);

/// n_points stratified samples in the unit cube [0,1]^dims (Latin
/// hypercube), deterministic in rng state.
std::vector<Eigen::VectorXd> latin_hypercube(Rng& rng, int n_points, int dims);

} // namespace oilfield
