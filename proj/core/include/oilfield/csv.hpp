#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "oilfield/production.hpp"

namespace oilfield {

/// Production CSV contract:
///   date,well_id,well_type,oil_vol_m3,gas_vol_m3,water_vol_m3,water_inj_m3,downhole_pressure_bar,downhole_temp_c
/// well_type is PRODUCER or INJECTOR, dates ISO-8601, empty cell = missing,
/// LF or CRLF line endings. Rates must be finite and non-negative. A zero
/// in a column that does not apply to the well kind is tolerated and
/// dropped; a non-zero value there is a MalformedRow.
ProductionHistory parse_production_csv(std::istream& in);
ProductionHistory parse_production_csv_file(const std::string& path);

/// Inverse of parse_production_csv; parse(write(h)) == h for valid input.
void write_production_csv(const ProductionHistory& history, std::ostream& out);

// --- forecast CSV (date,well_id,method,point_m3,lower_m3,upper_m3) ---

struct ForecastRow {
    Date date;
    std::string well_id;
    std::string method;
    double point_m3 = 0.0;
    std::optional<double> lower_m3;
    std::optional<double> upper_m3;
};

void write_forecast_csv(const std::vector<ForecastRow>& rows, std::ostream& out);
std::vector<ForecastRow> parse_forecast_csv(std::istream& in);

// --- metrics CSV (well_id,method,rmse_m3,dtw_scaled,reason) ---

struct MetricsRow {
    std::string well_id;
    std::string method;
    std::optional<double> rmse_m3;   // missing => NA (failed); reason says why
    std::optional<double> dtw_scaled;
    std::string reason;
};

void write_metrics_csv(const std::vector<MetricsRow>& rows, std::ostream& out);
std::vector<MetricsRow> parse_metrics_csv(std::istream& in);

// --- evolution log CSV (generation,best_rmse,mean_rmse,best_pipeline_id) ---

struct EvolutionLogRow {
    std::int64_t generation = 0;
    double best_rmse = 0.0;
    double mean_rmse = 0.0;
    std::string best_pipeline_id;
};

void write_evolution_log_csv(const std::vector<EvolutionLogRow>& rows, std::ostream& out);
std::vector<EvolutionLogRow> parse_evolution_log_csv(std::istream& in);

/// Shortest decimal text that round-trips the double exactly.
std::string format_double(double v);

} // namespace oilfield
