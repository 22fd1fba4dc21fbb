#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "saesg/estimation.hpp"
#include "saesg/simulation.hpp"

namespace saesg {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DataSource {
    std::filesystem::path path;
    Unit unit = Unit::rate_decimal;
    ColumnMap columns;
};

struct SimulationSettings {
    long n_paths = 100000;
    int horizon = 10;
    InitialStateMode initial_state = InitialStateMode::from_fit;
    unsigned threads = 0;
    double base_cpi = 100.0;
    double base_price = 100.0;
    bool include_ilb = true;
    /// "binary", "csv", "both" or "none".
    std::string scenario_output = "binary";
};

struct StabilitySettings {
    std::string series = "inflation";
    StabilityDirection direction = StabilityDirection::expanding_end;
    int min_obs = 25;
    bool parallel = false;
};

struct BacktestSettings {
    std::optional<int> split_year;
    long n_paths = 100000;
    int horizon = 10;
    bool include_ilb = false;
    bool apply_overrides = false;
};

/*
 * One JSON document drives every command. Keys:
 *   output_dir, seed,
 *   data.{cpi|inflation|dividend_yield|share_price|long_rate|money_market|short_rate|ilb}
 *        = {path, unit, year_column, value_column, series_column},
 *   models.<series> = {variant, fixed{}, ma_init, yield_unit},
 *   overrides.<series>{param: value}, params.<series> = path of a parameter JSON,
 *   optimizer{...}, simulation{...}, stability{...}, backtest{...}, diagnose{max_lag}.
 * Relative paths are resolved against the config file's directory.
 */
struct RunConfig {
    std::filesystem::path source;
    std::string raw_text;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 1;
    std::map<std::string, DataSource> data;
    std::map<SeriesKind, ModelSpec> models;
    std::map<SeriesKind, std::map<std::string, double>> overrides;
    std::map<SeriesKind, std::filesystem::path> param_files;
    FitOptions fit;
    SimulationSettings simulation;
    StabilitySettings stability;
    BacktestSettings backtest;
    int diagnose_max_lag = 10;
};

RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Reads every configured source and applies the transforms that produce
/// the modelled series.
DataBundle build_bundle(const RunConfig& config);

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace saesg
