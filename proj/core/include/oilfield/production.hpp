#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oilfield/dates.hpp"

namespace oilfield {

enum class WellKind { Producer, Injector };

std::string to_string(WellKind kind);

/// Value sequence with an explicit missing marker per sample.
using OptSeries = std::vector<std::optional<double>>;

/// Daily record of a single well. Columns that do not apply to the well
/// kind are empty; optional columns (pressure, temperature) are either
/// empty (absent) or sized to `dates`.
struct WellSeries {
    std::string well_id;
    WellKind kind = WellKind::Producer;
    std::vector<Date> dates;

    OptSeries oil_rate;     // m3/day, producers
    OptSeries water_rate;   // m3/day, producers
    OptSeries gas_rate;     // m3/day, producers
    OptSeries injection_rate; // m3/day, injectors

    OptSeries downhole_pressure;    // bar, optional
    OptSeries downhole_temperature; // degC, optional

    std::size_t size() const { return dates.size(); }
    bool has_pressure() const;
};

/// Checks the WellSeries invariants (column sizes, kind/column coherence,
/// strictly increasing dates, finite non-negative rates). Throws
/// InvalidParameters naming the violation.
void check_invariants(const WellSeries& well);

/// Multivariate field record: all wells plus the shared daily axis.
/// `date_axis` is non-empty only when every well is aligned to it
/// (see daily_aligned); parse output with heterogeneous spans leaves it
/// empty until resample_daily establishes the common axis.
struct ProductionHistory {
    std::vector<WellSeries> wells;
    std::vector<Date> date_axis;

    std::size_t size() const { return date_axis.size(); }

    const WellSeries* find(const std::string& well_id) const;
    WellSeries* find(const std::string& well_id);

    std::vector<std::string> producer_ids() const;
    std::vector<std::string> injector_ids() const;

    /// True when date_axis has exact 1-day spacing and every well's dates
    /// equal the axis.
    bool daily_aligned() const;
};

void check_invariants(const ProductionHistory& history);

enum class GapPolicy { Zero, LinearInterpolate, Fail };

/// Aligns every well onto the global min..max daily axis. Interior gaps
/// (missing days or missing cells inside a well's observed range) are
/// filled per policy; days outside a well's observed range get 0 under
/// Zero, the nearest observed value under LinearInterpolate, and raise
/// GapFound under Fail. Entirely absent optional columns stay absent.
ProductionHistory resample_daily(const ProductionHistory& history, GapPolicy policy);

/// Splits an aligned history into (first N - test_len days, last test_len
/// days). Throws TestTooLong unless 0 < test_len < N.
std::pair<ProductionHistory, ProductionHistory> split(const ProductionHistory& history,
                                                      std::int64_t test_len);

/// Inverse of split: appends `tail` to `head`; both must be aligned and
/// contiguous (tail starts the day after head ends).
ProductionHistory concat(const ProductionHistory& head, const ProductionHistory& tail);

} // namespace oilfield
