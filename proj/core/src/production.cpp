#include "oilfield/production.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "oilfield/errors.hpp"

namespace oilfield {

std::string to_string(WellKind kind) {
    return kind == WellKind::Producer ? "PRODUCER" : "INJECTOR";
}

bool WellSeries::has_pressure() const {
    if (downhole_pressure.size() != dates.size() || dates.empty()) return false;
    return std::any_of(downhole_pressure.begin(), downhole_pressure.end(),
                       [](const auto& v) { return v.has_value(); });
}

namespace {

void check_column(const WellSeries& well, const OptSeries& col, const char* name,
                  bool required, bool must_be_empty, bool non_negative) {
    if (must_be_empty) {
        if (!col.empty())
            throw InvalidParameters("well '" + well.well_id + "': column " + name +
                                    " must be empty for a " + to_string(well.kind));
        return;
    }
    if (col.empty()) {
        if (required)
            throw InvalidParameters("well '" + well.well_id + "': column " + name + " missing");
        return;
    }
    if (col.size() != well.dates.size())
        throw InvalidParameters("well '" + well.well_id + "': column " + name +
                                " length " + std::to_string(col.size()) + " != dates length " +
                                std::to_string(well.dates.size()));
    for (const auto& v : col) {
        if (!v) continue;
        if (!std::isfinite(*v))
            throw InvalidParameters("well '" + well.well_id + "': non-finite value in " + name);
        if (non_negative && *v < 0.0)
            throw InvalidParameters("well '" + well.well_id + "': negative value in " + name);
    }
}

} // namespace

void check_invariants(const WellSeries& well) {
    for (std::size_t i = 1; i < well.dates.size(); ++i) {
        if (!(well.dates[i - 1] < well.dates[i]))
            throw InvalidParameters("well '" + well.well_id + "': dates not strictly increasing at " +
                                    well.dates[i].to_string());
    }
    const bool producer = well.kind == WellKind::Producer;
    check_column(well, well.oil_rate, "oil_rate", producer, !producer, true);
    check_column(well, well.water_rate, "water_rate", false, !producer, true);
    check_column(well, well.gas_rate, "gas_rate", false, !producer, true);
    check_column(well, well.injection_rate, "injection_rate", !producer, producer, true);
    check_column(well, well.downhole_pressure, "downhole_pressure", false, false, false);
    check_column(well, well.downhole_temperature, "downhole_temperature", false, false, false);
}

const WellSeries* ProductionHistory::find(const std::string& well_id) const {
    for (const auto& w : wells)
        if (w.well_id == well_id) return &w;
    return nullptr;
}

WellSeries* ProductionHistory::find(const std::string& well_id) {
    for (auto& w : wells)
        if (w.well_id == well_id) return &w;
    return nullptr;
}

std::vector<std::string> ProductionHistory::producer_ids() const {
    std::vector<std::string> ids;
    for (const auto& w : wells)
        if (w.kind == WellKind::Producer) ids.push_back(w.well_id);
    return ids;
}

std::vector<std::string> ProductionHistory::injector_ids() const {
    std::vector<std::string> ids;
    for (const auto& w : wells)
        if (w.kind == WellKind::Injector) ids.push_back(w.well_id);
    return ids;
}

bool ProductionHistory::daily_aligned() const {
    if (date_axis.empty()) return false;
    for (std::size_t i = 1; i < date_axis.size(); ++i)
        if (date_axis[i] - date_axis[i - 1] != 1) return false;
    for (const auto& w : wells)
        if (w.dates != date_axis) return false;
    return true;
}

void check_invariants(const ProductionHistory& history) {
    std::vector<std::string> seen;
    for (const auto& w : history.wells) {
        check_invariants(w);
        if (std::find(seen.begin(), seen.end(), w.well_id) != seen.end())
            throw InvalidParameters("duplicate well id '" + w.well_id + "'");
        seen.push_back(w.well_id);
    }
}

namespace {

bool column_absent(const OptSeries& col) {
    return col.empty() || std::none_of(col.begin(), col.end(),
                                       [](const auto& v) { return v.has_value(); });
}

// Re-grids one column onto the axis. `observed` maps well-local sample
// index -> axis index. Gap handling per resample_daily's contract.
OptSeries regrid_column(const WellSeries& well, const OptSeries& col,
                        const std::vector<Date>& axis,
                        const std::vector<std::int64_t>& axis_index, GapPolicy policy) {
    OptSeries out(axis.size(), std::nullopt);
    for (std::size_t i = 0; i < col.size(); ++i)
        out[static_cast<std::size_t>(axis_index[i])] = col[i];

    // Indices of non-missing samples on the axis.
    std::vector<std::int64_t> known;
    for (std::size_t k = 0; k < out.size(); ++k)
        if (out[k]) known.push_back(static_cast<std::int64_t>(k));
    if (known.empty()) {
        if (policy == GapPolicy::Zero) return OptSeries(axis.size(), 0.0);
        throw GapFound(well.well_id, axis.front().to_string());
    }

    const std::int64_t first = known.front();
    const std::int64_t last = known.back();

    for (std::int64_t k = 0; k < static_cast<std::int64_t>(out.size()); ++k) {
        if (out[static_cast<std::size_t>(k)]) continue;
        const bool interior = k > first && k < last;
        if (policy == GapPolicy::Fail) {
            if (interior) throw GapFound(well.well_id, axis[static_cast<std::size_t>(k)].to_string());
            // edge regions: extend flat, matching LinearInterpolate below
            out[static_cast<std::size_t>(k)] =
                k < first ? out[static_cast<std::size_t>(first)] : out[static_cast<std::size_t>(last)];
        } else if (policy == GapPolicy::Zero) {
            out[static_cast<std::size_t>(k)] = 0.0;
        } else { // LinearInterpolate
            if (!interior) {
                out[static_cast<std::size_t>(k)] =
                    k < first ? out[static_cast<std::size_t>(first)] : out[static_cast<std::size_t>(last)];
            } else {
                const auto it = std::upper_bound(known.begin(), known.end(), k);
                const std::int64_t hi = *it;
                const std::int64_t lo = *(it - 1);
                const double vlo = *out[static_cast<std::size_t>(lo)];
                const double vhi = *out[static_cast<std::size_t>(hi)];
                const double t = static_cast<double>(k - lo) / static_cast<double>(hi - lo);
                out[static_cast<std::size_t>(k)] = vlo + t * (vhi - vlo);
            }
        }
    }
    return out;
}

} // namespace

ProductionHistory resample_daily(const ProductionHistory& history, GapPolicy policy) {
    check_invariants(history);
    ProductionHistory out;
    if (history.wells.empty()) return out;

    bool any_dates = false;
    Date lo, hi;
    for (const auto& w : history.wells) {
        if (w.dates.empty()) continue;
        if (!any_dates) {
            lo = w.dates.front();
            hi = w.dates.back();
            any_dates = true;
        } else {
            lo = std::min(lo, w.dates.front());
            hi = std::max(hi, w.dates.back());
        }
    }
    if (!any_dates) {
        out.wells = history.wells;
        return out;
    }

    std::vector<Date> axis;
    axis.reserve(static_cast<std::size_t>(hi - lo) + 1);
    for (Date d = lo; d <= hi; ++d) axis.push_back(d);

    for (const auto& w : history.wells) {
        WellSeries r;
        r.well_id = w.well_id;
        r.kind = w.kind;
        r.dates = axis;

        std::vector<std::int64_t> axis_index(w.dates.size());
        for (std::size_t i = 0; i < w.dates.size(); ++i) axis_index[i] = w.dates[i] - lo;

        auto regrid = [&](const OptSeries& col) -> OptSeries {
            if (column_absent(col)) return {};
            return regrid_column(w, col, axis, axis_index, policy);
        };
        if (w.kind == WellKind::Producer) {
            r.oil_rate = regrid_column(w, w.oil_rate, axis, axis_index, policy);
            r.water_rate = regrid(w.water_rate);
            r.gas_rate = regrid(w.gas_rate);
        } else {
            r.injection_rate = regrid_column(w, w.injection_rate, axis, axis_index, policy);
        }
        r.downhole_pressure = regrid(w.downhole_pressure);
        r.downhole_temperature = regrid(w.downhole_temperature);
        out.wells.push_back(std::move(r));
    }
    out.date_axis = std::move(axis);
    return out;
}

namespace {

OptSeries slice(const OptSeries& col, std::size_t from, std::size_t count) {
    if (col.empty()) return {};
    return OptSeries(col.begin() + static_cast<std::ptrdiff_t>(from),
                     col.begin() + static_cast<std::ptrdiff_t>(from + count));
}

ProductionHistory take(const ProductionHistory& h, std::size_t from, std::size_t count) {
    ProductionHistory out;
    out.date_axis.assign(h.date_axis.begin() + static_cast<std::ptrdiff_t>(from),
                         h.date_axis.begin() + static_cast<std::ptrdiff_t>(from + count));
    for (const auto& w : h.wells) {
        WellSeries s;
        s.well_id = w.well_id;
        s.kind = w.kind;
        s.dates = out.date_axis;
        s.oil_rate = slice(w.oil_rate, from, count);
        s.water_rate = slice(w.water_rate, from, count);
        s.gas_rate = slice(w.gas_rate, from, count);
        s.injection_rate = slice(w.injection_rate, from, count);
        s.downhole_pressure = slice(w.downhole_pressure, from, count);
        s.downhole_temperature = slice(w.downhole_temperature, from, count);
        out.wells.push_back(std::move(s));
    }
    return out;
}

} // namespace

std::pair<ProductionHistory, ProductionHistory> split(const ProductionHistory& history,
                                                      std::int64_t test_len) {
    if (!history.daily_aligned()) throw Error("split: history is not daily-aligned");
    const auto n = static_cast<std::int64_t>(history.size());
    if (test_len <= 0 || test_len >= n)
        throw TestTooLong("test_len " + std::to_string(test_len) + " must be in (0, " +
                          std::to_string(n) + ")");
    const auto train_len = static_cast<std::size_t>(n - test_len);
    return {take(history, 0, train_len), take(history, train_len, static_cast<std::size_t>(test_len))};
}

ProductionHistory concat(const ProductionHistory& head, const ProductionHistory& tail) {
    if (!head.daily_aligned() || !tail.daily_aligned())
        throw Error("concat: both parts must be daily-aligned");
    if (tail.date_axis.front() - head.date_axis.back() != 1)
        throw Error("concat: tail does not start the day after head ends");
    if (head.wells.size() != tail.wells.size())
        throw Error("concat: well sets differ");

    ProductionHistory out = head;
    out.date_axis.insert(out.date_axis.end(), tail.date_axis.begin(), tail.date_axis.end());
    for (auto& w : out.wells) {
        const WellSeries* t = tail.find(w.well_id);
        if (!t || t->kind != w.kind) throw Error("concat: well sets differ");
        auto append = [&w](OptSeries& dst, const OptSeries& src) {
            if (dst.empty() && src.empty()) return;
            if (dst.empty() != src.empty())
                throw Error("concat: well '" + w.well_id + "' has a column present on one side only");
            dst.insert(dst.end(), src.begin(), src.end());
        };
        w.dates = out.date_axis;
        append(w.oil_rate, t->oil_rate);
        append(w.water_rate, t->water_rate);
        append(w.gas_rate, t->gas_rate);
        append(w.injection_rate, t->injection_rate);
        append(w.downhole_pressure, t->downhole_pressure);
        append(w.downhole_temperature, t->downhole_temperature);
    }
    return out;
}

} // namespace oilfield
