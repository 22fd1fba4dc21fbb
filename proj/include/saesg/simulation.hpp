#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "saesg/estimation.hpp"
#include "saesg/model_spec.hpp"
#include "saesg/models.hpp"

namespace saesg {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/*
 * Counter-based unit normals. The variate for (seed, path, series, year) is
 *
 *   k  = splitmix64(splitmix64(splitmix64(seed) ^ path) ^ (series << 32 | year))
 *   u1 = (1 + (k >> 11)) * 2^-53                       in (0, 1]
 *   u2 = (splitmix64(k) >> 11) * 2^-53                 in [0, 1)
 *   z  = sqrt(-2 ln u1) * cos(2 pi u2)
 *
 * so every draw is independent of evaluation order. `series` is the index
 * of SeriesKind in cascade order and `year` the 0-based projection year.
 */
double normal_variate(std::uint64_t seed, std::uint64_t path, SeriesKind series, std::uint32_t year);

class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path) : seed_(seed), path_(path) {}
    double operator()(SeriesKind series, std::uint32_t year) const {
        return normal_variate(seed_, path_, series, year);
    }

private:
    std::uint64_t seed_;
    std::uint64_t path_;
};

struct SubModel {
    ModelSpec spec;
    ParamSet params;
};

/// Calibrated sub-models keyed by series; inflation is mandatory.
using CascadeParams = std::map<SeriesKind, SubModel>;

/// Throws SimulationError if a sub-model is present without the upstream
/// models it depends on.
void check_dependencies(const CascadeParams& models);

enum class InitialStateMode { from_fit, neutral };

/// Latent deviations at zero and levels at their long-run means.
CascadeState neutral_state(const CascadeParams& models);

/// State after the last fitted year, assembled from each fit's filter.
/// All fits must end in the same year.
CascadeState initial_state_from_fits(const std::map<SeriesKind, FitResult>& fits);

/// Convenience: dispatches on `mode` (neutral only needs the parameters).
CascadeState initial_state(const std::map<SeriesKind, FitResult>& fits, InitialStateMode mode);

/// Paths x horizon, row-major.
using PathMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SimulationOptions {
    int horizon = 10;
    long n_paths = 1000;
    std::uint64_t seed = 1;
    double base_cpi = 100.0;
    double base_price = 100.0;
    /// First projected calendar year (labels only).
    int start_year = 1;
    /// Worker threads; 0 = hardware concurrency, 1 = sequential.
    unsigned threads = 1;
    /// Track CPI, dividend and share-price index levels. Switch off for very
    /// long horizons, where the cumulated levels overflow.
    bool index_levels = true;
};

/// Names of simulated series, in export order.
inline const std::vector<std::string> kScenarioSeries = {
    "inflation",      "cpi_index",  "dividend_yield", "dividend_growth", "dividend_index",
    "share_price_index", "long_rate", "log_spread",     "short_rate",      "ilb_rate"};

struct ScenarioSet {
    std::uint64_t seed = 0;
    long n_paths = 0;
    int horizon = 0;
    int start_year = 1;
    std::map<std::string, PathMatrix> series;
    CascadeState initial_state;
    CascadeParams models;
};

ScenarioSet simulate(const CascadeParams& models, const CascadeState& initial, const SimulationOptions& options);

struct FanRow {
    int year = 0;
    std::map<double, double> quantiles;  ///< probability -> value
    double mean = 0.0;
    double lower(double level) const { return quantiles.at((1.0 - level) / 2.0); }
    double upper(double level) const { return quantiles.at((1.0 + level) / 2.0); }
};

struct FanTable {
    std::vector<double> levels;
    std::map<std::string, std::vector<FanRow>> series;
};

/// Empirical quantile at probability p, linear between order statistics at
/// rank p(n+1) (clamped to the sample range). `sorted` must be ascending.
double empirical_quantile(const std::vector<double>& sorted, double p);

/// Per-year quantiles at 0.5 and (1 -/+ level)/2 for each level, plus the mean.
FanTable fan(const ScenarioSet& scenarios, const std::vector<double>& levels = {0.95, 0.99});

struct BacktestCell {
    int year = 0;
    double observed = 0.0;
    double lo95 = 0.0, hi95 = 0.0, lo99 = 0.0, hi99 = 0.0;
    bool inside_95 = false;
    bool inside_99 = false;
};

struct BacktestOptions {
    std::map<SeriesKind, ModelSpec> specs;
    int split_year = 0;
    int horizon = 10;
    long n_paths = 100000;
    std::uint64_t seed = 1;
    bool include_ilb = false;
    /// Parameter values imposed after fitting, e.g. a lower mu_q.
    std::map<SeriesKind, std::map<std::string, double>> overrides;
    FitOptions fit_options;
    unsigned threads = 1;
};

struct BacktestReport {
    int split_year = 0;
    std::map<std::string, std::vector<BacktestCell>> cells;
    std::map<std::string, double> coverage_95;
    std::map<std::string, double> coverage_99;
    std::map<SeriesKind, FitResult> fits;
    FanTable fan;
};

/*
 * Fits the cascade in dependency order. The dividend fit consumes the
 * dividend-yield residuals. Throws on the first failing model unless
 * `failures` is given, in which case failures are recorded and the
 * remaining independent models are still fitted.
 */
std::map<SeriesKind, FitResult> fit_cascade(const std::map<SeriesKind, ModelSpec>& specs, DataBundle data,
                                            const FitOptions& options,
                                            std::map<SeriesKind, std::string>* failures = nullptr);

BacktestReport backtest(const DataBundle& data, const BacktestOptions& options);

}  // namespace saesg
