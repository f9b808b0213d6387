#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace oilfield {

/// Deterministic random stream. Wraps mt19937_64 but derives all variates
/// from raw 64-bit draws, so results do not depend on the standard
/// library's distribution implementations. Sub-streams split off with
/// `fork` are independent of draw order in the parent, which keeps
/// concurrent consumers schedule-independent.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(bounded(span));
    }

    /// Log-uniform in [lo, hi], lo > 0.
    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    /// Standard normal via Box-Muller (one value per call, no caching).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Independent sub-stream keyed by `stream_id`; deterministic in
    /// (parent seed, stream_id) and unaffected by parent draws.
    Rng fork(std::uint64_t stream_id) const {
        return Rng(mix(seed_ ^ mix(stream_id + 0x9e3779b97f4a7c15ull)));
    }

    std::uint64_t seed() const { return seed_; }

private:
    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Rejection-free enough for our ranges; uses 64-bit modulo with
    // rejection to remove bias.
    std::uint64_t bounded(std::uint64_t span) {
        if (span == 0) return engine_();
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % span;
    }

    std::uint64_t seed_ = 0;
    std::mt19937_64 engine_;
};

} // namespace oilfield
