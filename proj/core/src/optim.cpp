#include "oilfield/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oilfield/errors.hpp"

namespace oilfield {

namespace {

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

} // namespace

Eigen::VectorXd FeasibleBox::project(Eigen::VectorXd x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = clamp(x(i), lower(i), upper(i));

    for (const auto& group : sum_constraints) {
        double sum = 0.0;
        for (const int i : group.indices) sum += x(i);
        if (sum <= group.cap) continue;

        // Project the group's subvector onto {l <= z <= u, sum z = cap}:
        // z_i = clamp(y_i - t), with t found by bisection (sum is monotone
        // non-increasing in t).
        const auto value_at = [&](double t) {
            double s = 0.0;
            for (const int i : group.indices) s += clamp(x(i) - t, lower(i), upper(i));
            return s;
        };
        double t_lo = 0.0;
        double t_hi = 1.0;
        for (int it = 0; it < 80 && value_at(t_hi) > group.cap; ++it) t_hi *= 2.0;
        if (value_at(t_hi) > group.cap)
            throw Error("projection: group cap below the sum of lower bounds");
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (t_lo + t_hi);
            if (value_at(mid) > group.cap) t_lo = mid;
            else t_hi = mid;
        }
        for (const int i : group.indices) x(i) = clamp(x(i) - t_hi, lower(i), upper(i));
    }
    return x;
}

namespace {

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = x(i);
        probe(i) = xi + h;
        const double fp = f(probe);
        probe(i) = xi - h;
        const double fm = f(probe);
        probe(i) = xi;
        g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
}

} // namespace

OptimResult minimize_projected(const std::function<double(const Eigen::VectorXd&)>& objective,
                               const FeasibleBox& feasible, const Eigen::VectorXd& x0,
                               const OptimOptions& options) {
    constexpr double sigma = 1e-4; // Armijo sufficient-decrease parameter

    Eigen::VectorXd x = feasible.project(x0);
    double fx = objective(x);
    if (!std::isfinite(fx)) throw OptimizerDiverged(0, fx);

    Eigen::VectorXd g = fd_gradient(objective, x, options.fd_step);
    double alpha = 1.0 / std::max(1e-12, g.lpNorm<Eigen::Infinity>());

    OptimResult result;
    Eigen::VectorXd x_prev = x;
    Eigen::VectorXd g_prev = g;

    int iter = 0;
    for (; iter < options.max_iters; ++iter) {
        // Backtracking projected step: accept on sufficient decrease
        // relative to the squared step length.
        double step = clamp(alpha, 1e-10, 1e10);
        Eigen::VectorXd x_new;
        double f_new = fx;
        bool accepted = false;
        for (int bt = 0; bt < 50; ++bt) {
            x_new = feasible.project(x - step * g);
            const double move2 = (x_new - x).squaredNorm();
            if (move2 == 0.0) break; // stationary for this step size
            f_new = objective(x_new);
            if (!std::isfinite(f_new)) throw OptimizerDiverged(static_cast<std::size_t>(iter), f_new);
            if (f_new <= fx - sigma / step * move2) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            result.converged = true;
            break;
        }

        const double decrease = fx - f_new;
        x_prev.swap(x);
        g_prev.swap(g);
        x = std::move(x_new);
        fx = f_new;
        g = fd_gradient(objective, x, options.fd_step);

        // Spectral step for the next iteration.
        const Eigen::VectorXd s = x - x_prev;
        const Eigen::VectorXd y = g - g_prev;
        const double sy = s.dot(y);
        alpha = sy > 1e-16 ? s.squaredNorm() / sy : step * 2.0;

        if (decrease <= options.tol * std::max(1.0, std::abs(fx))) {
            ++iter;
            result.converged = true;
            break;
        }
    }

    result.x = std::move(x);
    result.value = fx;
    result.iterations = iter;
    return result;
}

std::vector<Eigen::VectorXd> latin_hypercube(Rng& rng, int n_points, int dims) {
    std::vector<Eigen::VectorXd> points(static_cast<std::size_t>(n_points),
                                        Eigen::VectorXd::Zero(dims));
    std::vector<int> order(static_cast<std::size_t>(n_points));
    for (int d = 0; d < dims; ++d) {
        for (int i = 0; i < n_points; ++i) order[static_cast<std::size_t>(i)] = i;
        // Fisher-Yates shuffle of the strata assignment for this dimension.
        for (int i = n_points - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform_int(0, i));
            std::swap(order[static_cast<std::size_t>(i)], order[j]);
        }
        for (int i = 0; i < n_points; ++i) {
            const double u = rng.uniform();
            points[static_cast<std::size_t>(i)](d) =
                (static_cast<double>(order[static_cast<std::size_t>(i)]) + u) /
                static_cast<double>(n_points);
        }
    }
    return points;
}

} // namespace oilfield
