#include "oilfield/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "oilfield/errors.hpp"

namespace oilfield {

namespace {

constexpr const char* kProductionHeader =
    "date,well_id,well_type,oil_vol_m3,gas_vol_m3,water_vol_m3,water_inj_m3,"
    "downhole_pressure_bar,downhole_temp_c";

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

std::string strip_eol(std::string line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    return line;
}

std::string strip_bom(std::string line) {
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
        return line.substr(3);
    return line;
}

std::optional<double> parse_cell(const std::string& cell, std::size_t line_no, const char* col) {
    if (cell.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw MalformedRow(line_no, std::string("cannot parse ") + col + " value '" + cell + "'");
    if (!std::isfinite(v))
        throw MalformedRow(line_no, std::string("non-finite ") + col + " value");
    return v;
}

struct RawRow {
    Date date;
    std::array<std::optional<double>, 6> vals; // oil, gas, water, inj, pressure, temp
};

} // namespace

std::string format_double(double v) {
    char buf[40];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

ProductionHistory parse_production_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw MalformedRow(1, "missing header");
    line = strip_eol(strip_bom(line));
    if (line != kProductionHeader) throw MalformedRow(1, "header does not match production schema");

    struct WellAcc {
        WellKind kind;
        std::vector<RawRow> rows;
        std::set<std::int64_t> seen_dates;
    };
    std::map<std::string, WellAcc> acc;
    std::vector<std::string> order;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_eol(line);
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != 9)
            throw MalformedRow(line_no, "expected 9 columns, got " + std::to_string(cells.size()));

        const auto date = Date::parse(cells[0]);
        if (!date) throw MalformedRow(line_no, "bad date '" + cells[0] + "'");
        const std::string& well_id = cells[1];
        if (well_id.empty()) throw MalformedRow(line_no, "empty well_id");

        WellKind kind;
        if (cells[2] == "PRODUCER") kind = WellKind::Producer;
        else if (cells[2] == "INJECTOR") kind = WellKind::Injector;
        else throw UnknownWellKind(cells[2]);

        RawRow row;
        row.date = *date;
        static constexpr const char* names[6] = {"oil_vol_m3",   "gas_vol_m3",
                                                 "water_vol_m3", "water_inj_m3",
                                                 "downhole_pressure_bar", "downhole_temp_c"};
        for (int c = 0; c < 6; ++c) row.vals[c] = parse_cell(cells[3 + c], line_no, names[c]);
        for (int c = 0; c < 4; ++c) {
            if (row.vals[c] && *row.vals[c] < 0.0)
                throw MalformedRow(line_no, std::string("negative ") + names[c]);
        }
        // Columns that do not apply to the kind: zeros are dropped, real
        // values rejected.
        const auto reject_foreign = [&](int c) {
            if (!row.vals[c]) return;
            if (*row.vals[c] != 0.0)
                throw MalformedRow(line_no, std::string(names[c]) + " set on a " +
                                                (kind == WellKind::Producer ? "PRODUCER" : "INJECTOR") +
                                                " row");
            row.vals[c].reset();
        };
        if (kind == WellKind::Producer) {
            reject_foreign(3);
        } else {
            reject_foreign(0);
            reject_foreign(1);
            reject_foreign(2);
        }

        auto it = acc.find(well_id);
        if (it == acc.end()) {
            it = acc.emplace(well_id, WellAcc{kind, {}, {}}).first;
            order.push_back(well_id);
        } else if (it->second.kind != kind) {
            throw MalformedRow(line_no, "well '" + well_id + "' changes well_type");
        }
        if (!it->second.seen_dates.insert(date->days_since_epoch()).second)
            throw DuplicateObservation(date->to_string(), well_id);
        it->second.rows.push_back(row);
    }

    ProductionHistory history;
    for (const auto& id : order) {
        auto& a = acc.at(id);
        std::sort(a.rows.begin(), a.rows.end(),
                  [](const RawRow& x, const RawRow& y) { return x.date < y.date; });

        WellSeries w;
        w.well_id = id;
        w.kind = a.kind;
        const std::size_t n = a.rows.size();
        w.dates.reserve(n);
        for (const auto& r : a.rows) w.dates.push_back(r.date);

        auto col = [&](int c) {
            OptSeries s(n);
            bool any = false;
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = a.rows[i].vals[c];
                any = any || s[i].has_value();
            }
            if (!any) s.clear(); // entirely absent column
            return s;
        };
        if (a.kind == WellKind::Producer) {
            w.oil_rate = col(0);
            if (w.oil_rate.empty()) w.oil_rate.assign(n, std::nullopt);
            w.gas_rate = col(1);
            w.water_rate = col(2);
        } else {
            w.injection_rate = col(3);
            if (w.injection_rate.empty()) w.injection_rate.assign(n, std::nullopt);
        }
        w.downhole_pressure = col(4);
        w.downhole_temperature = col(5);
        history.wells.push_back(std::move(w));
    }

    // A common axis exists straight from parse when every well reports the
    // same dates.
    if (!history.wells.empty()) {
        bool same = true;
        for (const auto& w : history.wells)
            if (w.dates != history.wells.front().dates) { same = false; break; }
        if (same) history.date_axis = history.wells.front().dates;
    }
    check_invariants(history);
    return history;
}

ProductionHistory parse_production_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    return parse_production_csv(in);
}

namespace {

std::string cell_of(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string{};
}

} // namespace

void write_production_csv(const ProductionHistory& history, std::ostream& out) {
    out << kProductionHeader << "\n";
    for (const auto& w : history.wells) {
        auto at = [&](const OptSeries& col, std::size_t i) -> std::optional<double> {
            if (col.empty()) return std::nullopt;
            return col[i];
        };
        for (std::size_t i = 0; i < w.dates.size(); ++i) {
            out << w.dates[i].to_string() << ',' << w.well_id << ',' << to_string(w.kind) << ','
                << cell_of(at(w.oil_rate, i)) << ',' << cell_of(at(w.gas_rate, i)) << ','
                << cell_of(at(w.water_rate, i)) << ',' << cell_of(at(w.injection_rate, i)) << ','
                << cell_of(at(w.downhole_pressure, i)) << ',' << cell_of(at(w.downhole_temperature, i))
                << "\n";
        }
    }
}

// --- forecast CSV ---

namespace {

constexpr const char* kForecastHeader = "date,well_id,method,point_m3,lower_m3,upper_m3";

std::vector<std::vector<std::string>> read_table(std::istream& in, const char* header,
                                                 std::size_t ncols) {
    std::string line;
    if (!std::getline(in, line) || strip_eol(strip_bom(line)) != header)
        throw MalformedRow(1, std::string("expected header '") + header + "'");
    std::vector<std::vector<std::string>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_eol(line);
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != ncols)
            throw MalformedRow(line_no, "expected " + std::to_string(ncols) + " columns");
        rows.push_back(std::move(cells));
    }
    return rows;
}

double required_double(const std::string& cell, std::size_t row_idx, const char* col) {
    const auto v = parse_cell(cell, row_idx + 2, col);
    if (!v) throw MalformedRow(row_idx + 2, std::string("empty ") + col);
    return *v;
}

} // namespace

void write_forecast_csv(const std::vector<ForecastRow>& rows, std::ostream& out) {
    out << kForecastHeader << "\n";
    for (const auto& r : rows) {
        out << r.date.to_string() << ',' << r.well_id << ',' << r.method << ','
            << format_double(r.point_m3) << ',' << cell_of(r.lower_m3) << ',' << cell_of(r.upper_m3)
            << "\n";
    }
}

std::vector<ForecastRow> parse_forecast_csv(std::istream& in) {
    std::vector<ForecastRow> rows;
    const auto table = read_table(in, kForecastHeader, 6);
    rows.reserve(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& c = table[i];
        ForecastRow r;
        const auto date = Date::parse(c[0]);
        if (!date) throw MalformedRow(i + 2, "bad date '" + c[0] + "'");
        r.date = *date;
        r.well_id = c[1];
        r.method = c[2];
        r.point_m3 = required_double(c[3], i, "point_m3");
        r.lower_m3 = parse_cell(c[4], i + 2, "lower_m3");
        r.upper_m3 = parse_cell(c[5], i + 2, "upper_m3");
        rows.push_back(std::move(r));
    }
    return rows;
}

// --- metrics CSV ---

namespace {
constexpr const char* kMetricsHeader = "well_id,method,rmse_m3,dtw_scaled,reason";
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, std::ostream& out) {
    out << kMetricsHeader << "\n";
    for (const auto& r : rows) {
        out << r.well_id << ',' << r.method << ','
            << (r.rmse_m3 ? format_double(*r.rmse_m3) : std::string("NA")) << ','
            << (r.dtw_scaled ? format_double(*r.dtw_scaled) : std::string("NA")) << ',' << r.reason
            << "\n";
    }
}

std::vector<MetricsRow> parse_metrics_csv(std::istream& in) {
    std::vector<MetricsRow> rows;
    const auto table = read_table(in, kMetricsHeader, 5);
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& c = table[i];
        MetricsRow r;
        r.well_id = c[0];
        r.method = c[1];
        if (c[2] != "NA") r.rmse_m3 = required_double(c[2], i, "rmse_m3");
        if (c[3] != "NA") r.dtw_scaled = required_double(c[3], i, "dtw_scaled");
        r.reason = c[4];
        rows.push_back(std::move(r));
    }
    return rows;
}

// --- evolution log CSV ---

namespace {
constexpr const char* kEvoHeader = "generation,best_rmse,mean_rmse,best_pipeline_id";
}

void write_evolution_log_csv(const std::vector<EvolutionLogRow>& rows, std::ostream& out) {
    out << kEvoHeader << "\n";
    for (const auto& r : rows) {
        out << r.generation << ',' << format_double(r.best_rmse) << ',' << format_double(r.mean_rmse)
            << ',' << r.best_pipeline_id << "\n";
    }
}

std::vector<EvolutionLogRow> parse_evolution_log_csv(std::istream& in) {
    std::vector<EvolutionLogRow> rows;
    const auto table = read_table(in, kEvoHeader, 4);
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& c = table[i];
        EvolutionLogRow r;
        r.generation = std::stoll(c[0]);
        r.best_rmse = required_double(c[1], i, "best_rmse");
        r.mean_rmse = required_double(c[2], i, "mean_rmse");
        r.best_pipeline_id = c[3];
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace oilfield
