#pragma once

#include <span>
#include <utility>
#include <vector>

namespace oilfield {

/// Point forecast with a two-sided probabilistic interval per timestamp.
struct IntervalForecast {
    std::vector<double> points; // m3/day
    std::vector<double> lower;
    std::vector<double> upper;
    double level = 0.95; // two-sided coverage target

    std::size_t size() const { return points.size(); }
};

/// sqrt(mean squared difference). Throws LengthMismatch / EmptySequence.
double rmse(std::span<const double> predicted, std::span<const double> observed);

/// Classic dynamic-time-warping alignment cost: per-pair cost |a_i - b_j|,
/// steps {match, insert, delete}, no window constraint, no path
/// normalization. Throws EmptySequence.
double dtw(std::span<const double> a, std::span<const double> b);

/// Student-t quantile: inverse CDF at probability p with nu degrees of
/// freedom, computed by numeric inversion of the t CDF (accurate to well
/// below 1e-6).
double student_t_quantile(double p, double nu);

double student_t_cdf(double t, double nu);

/// Two-sided interval mean +/- t(1-(1-level)/2, n-1) * s with s the sample
/// (divide-by-n-1) standard deviation. Throws TooFewMembers for n < 2.
std::pair<double, double> t_interval(std::span<const double> members, double level = 0.95);

/// Fraction of timestamps with lower <= actual <= upper.
double coverage(const IntervalForecast& intervals, std::span<const double> actual);

double mean(std::span<const double> values);

/// Sample standard deviation (divide by n-1).
double sample_stddev(std::span<const double> values);

} // namespace oilfield
