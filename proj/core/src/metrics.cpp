#include "oilfield/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oilfield/errors.hpp"

namespace oilfield {

double mean(std::span<const double> values) {
    if (values.empty()) throw EmptySequence("mean of empty sequence");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
    if (values.size() < 2) throw EmptySequence("sample stddev needs at least 2 values");
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double rmse(std::span<const double> predicted, std::span<const double> observed) {
    if (predicted.size() != observed.size())
        throw LengthMismatch("rmse: lengths " + std::to_string(predicted.size()) + " vs " +
                             std::to_string(observed.size()));
    if (predicted.empty()) throw EmptySequence("rmse of empty sequences");
    double ss = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - observed[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(predicted.size()));
}

double dtw(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw EmptySequence("dtw of empty sequence");
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    constexpr double inf = std::numeric_limits<double>::infinity();

    // One rolling row of the (n+1) x (m+1) accumulated-cost table.
    std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = inf;
        for (std::size_t j = 1; j <= m; ++j) {
            const double cost = std::abs(a[i - 1] - b[j - 1]);
            cur[j] = cost + std::min({prev[j - 1], prev[j], cur[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

namespace {

// Regularized incomplete beta I_x(a, b) via the standard continued
// fraction (Lentz), good to ~1e-15 for the arguments used here.
double betacf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 3e-16;
    constexpr double fpmin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

} // namespace

double student_t_cdf(double t, double nu) {
    if (t == 0.0) return 0.5;
    const double x = nu / (nu + t * t);
    const double p = 0.5 * incomplete_beta(nu / 2.0, 0.5, x);
    return t > 0.0 ? 1.0 - p : p;
}

double student_t_quantile(double p, double nu) {
    if (!(p > 0.0 && p < 1.0)) throw Error("t quantile: p must be in (0, 1)");
    if (!(nu > 0.0)) throw Error("t quantile: nu must be positive");
    if (p == 0.5) return 0.0;

    // Bracket then bisect on the monotone CDF.
    double lo = -1.0, hi = 1.0;
    while (student_t_cdf(lo, nu) > p) lo *= 2.0;
    while (student_t_cdf(hi, nu) < p) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, nu) < p) lo = mid;
        else hi = mid;
        if (hi - lo < 1e-13 * std::max(1.0, std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

std::pair<double, double> t_interval(std::span<const double> members, double level) {
    if (members.size() < 2) throw TooFewMembers(members.size());
    if (!(level > 0.0 && level < 1.0)) throw Error("t_interval: level must be in (0, 1)");
    const double m = mean(members);
    const double s = sample_stddev(members);
    const double q = student_t_quantile(1.0 - (1.0 - level) / 2.0,
                                        static_cast<double>(members.size() - 1));
    return {m - q * s, m + q * s};
}

double coverage(const IntervalForecast& intervals, std::span<const double> actual) {
    if (intervals.size() != actual.size() || intervals.lower.size() != actual.size() ||
        intervals.upper.size() != actual.size())
        throw LengthMismatch("coverage: interval and actual lengths differ");
    if (actual.empty()) throw EmptySequence("coverage of empty sequences");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < actual.size(); ++i)
        if (intervals.lower[i] <= actual[i] && actual[i] <= intervals.upper[i]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(actual.size());
}

} // namespace oilfield
