#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "saesg/diagnostics.hpp"
#include "saesg/estimation.hpp"
#include "saesg/simulation.hpp"

namespace saesg {

using json = nlohmann::json;

/// Shortest text that reads back to the same double ("%.17g").
std::string format_double(double value);

json to_json(const AnnualSeries& series);
AnnualSeries series_from_json(const json& j);

/*
 * {"series": ..., "variant": ..., "yield_unit": ..., "ma_init": ...,
 *  "parameters": [{"name", "value", "std_error", "fixed"}]}
 * Values are written with 17 significant digits, so reading back is exact.
 */
json to_json(const ModelSpec& spec, const ParamSet& params);
SubModel submodel_from_json(const json& j);

json to_json(const DiagnosticsReport& report);
json to_json(const KpssResult& result);
json to_json(const FitResult& fit);
json to_json(const StabilityTable& table);
json to_json(const BacktestReport& report);

/// Flat object merging the residual battery and the KPSS result.
json diagnose_json(const std::string& series, const DiagnosticsReport& report, const KpssResult& kpss);

/// period_bound_year, then <param>_estimate, <param>_se, <param>_ci_low, <param>_ci_high.
void write_stability_csv(std::ostream& out, const StabilityTable& table);

/// year, series, q005, q025, q50, q975, q995, mean. Needs the 95% and 99% levels.
void write_fan_csv(std::ostream& out, const FanTable& fan);

/// Long format: path, year, series, value.
void write_scenarios_csv(std::ostream& out, const ScenarioSet& scenarios);

/*
 * Binary layout, little-endian:
 *   6 bytes  "SAESG1"
 *   u64      number of series S
 *   u64      n_paths
 *   u64      horizon
 *   u64      bit mask of present series (bit i = kScenarioSeries[i])
 *   u64      seed
 *   f64[S * n_paths * horizon]  row-major [series][path][year], series in
 *            kScenarioSeries order
 */
void write_scenarios_binary(std::ostream& out, const ScenarioSet& scenarios);

struct ScenarioBinary {
    std::uint64_t seed = 0;
    long n_paths = 0;
    int horizon = 0;
    std::map<std::string, PathMatrix> series;
};
ScenarioBinary read_scenarios_binary(std::istream& in);

/// year, series, observed, lo95, hi95, lo99, hi99, inside_95, inside_99.
void write_backtest_csv(std::ostream& out, const BacktestReport& report);

/// Human-readable table of one or more fits, one column per model.
std::string format_fit_table(const std::vector<FitResult>& fits);

}  // namespace saesg
