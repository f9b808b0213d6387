#pragma once

#include <cstdint>
#include <optional>

#include "oilfield/crm.hpp"
#include "oilfield/production.hpp"

namespace oilfield::testsupport {

/// Knobs for the seeded synthetic waterflood generator. With zero
/// disturbance and noise the oil rates follow the CRM recurrence exactly,
/// so the generating parameters are the fit oracle.
struct SyntheticSpec {
    int n_producers = 2;
    int n_injectors = 2;
    std::int64_t days = 400;
    std::uint64_t seed = 7;
    double disturbance_amp = 0.0; // per-producer shifted sinusoid, m3/day
    double noise_std = 0.0;       // gaussian noise on oil rates, m3/day
    bool with_pressure = false;
    std::optional<CrmParameters> params; // override the random truth
};

struct SyntheticField {
    ProductionHistory history;
    CrmParameters truth;
};

SyntheticField make_synthetic_field(const SyntheticSpec& spec);

/// The 2x2 noise-free recovery fixture: f = [[0.3, 0.2], [0.1, 0.7]],
/// taus in [5, 15].
SyntheticField make_recovery_fixture(std::int64_t days = 400, std::uint64_t seed = 7);

} // namespace oilfield::testsupport
