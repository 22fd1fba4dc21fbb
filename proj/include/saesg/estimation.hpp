#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "saesg/diagnostics.hpp"
#include "saesg/model_spec.hpp"
#include "saesg/models.hpp"
#include "saesg/nelder_mead.hpp"
#include "saesg/series.hpp"

namespace saesg {

class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/*
 * Modelled series on a common decimal scale. Only the series needed by the
 * selected variants have to be present. `yield_residuals` carries eps_y from
 * a dividend-yield fit into the dividend model.
 */
struct DataBundle {
    std::optional<AnnualSeries> inflation;        ///< delta_q
    std::optional<AnnualSeries> dividend_yield;   ///< y, decimal
    std::optional<AnnualSeries> dividend_growth;  ///< delta_d
    std::optional<AnnualSeries> long_rate;        ///< delta_c
    std::optional<AnnualSeries> short_rate;       ///< delta_b
    std::optional<AnnualSeries> ilb_rate;         ///< delta_r
    std::optional<AnnualSeries> yield_residuals;  ///< eps_y

    std::optional<AnnualSeries> cpi;          ///< Q(t), used for backtest comparisons
    std::optional<AnnualSeries> share_price;  ///< P(t)
    std::optional<AnnualSeries> dividends;    ///< D(t)

    /// Every present series restricted to [from, to]; series with no year in
    /// range are dropped.
    DataBundle slice(int from, int to) const;

    /// bd(t) = ln(delta_c / delta_b).
    AnnualSeries spread() const;
};

/// The series a spec is fitted to, on the scale its innovations act on
/// (e.g. ln y for dividend yields, ln delta_c for ar1_log long rates).
AnnualSeries modelled_series(const ModelSpec& spec, const DataBundle& data);

/// Runs the spec's filter on the relevant series of the bundle.
FilterOutput run_filter(const ModelSpec& spec, const ParamSet& params, const DataBundle& data);

/// Conditional Gaussian negative log-likelihood 0.5 * sum[ln(2 pi s^2) + e^2/s^2].
/// Inadmissible parameters and filter failures give +inf; `reason` receives the cause.
double neg_log_likelihood(const ModelSpec& spec, const ParamSet& params, const DataBundle& data,
                          std::string* reason = nullptr);

struct FitOptions {
    OptimizerConfig optimizer;
    /// Number of starts generated around the method-of-moments point (the
    /// first is the point itself).
    int n_starts = 5;
    std::uint64_t seed = 20190601;
    /// Extra user starts in natural parameters; missing names fall back to
    /// the method-of-moments value.
    std::vector<std::map<std::string, double>> starts;
    bool include_default_starts = true;
    int diagnostic_lags = 10;
};

struct FitResult {
    ModelSpec spec;
    ParamSet params;  ///< with std_error for free parameters when available
    double log_likelihood = 0.0;
    AnnualSeries residuals;
    AnnualSeries standardized_residuals;
    long n_obs = 0;
    DiagnosticsReport diagnostics;
    FilterOutput filter;
    bool converged = false;
    long iterations = 0;
    /// Set when the observed information was singular and SEs are missing.
    bool se_warning = false;
};

/// Method-of-moments starting point in natural parameters.
std::map<std::string, double> initial_values(const ModelSpec& spec, const DataBundle& data);

FitResult fit(const ModelSpec& spec, const DataBundle& data, const FitOptions& options = {});

enum class StabilityDirection { expanding_end, expanding_start };

std::string to_string(StabilityDirection direction);
StabilityDirection direction_from_string(const std::string& name);

struct StabilityRow {
    int bound_year = 0;  ///< end year (expanding_end) or start year (expanding_start)
    bool converged = false;
    std::string error;
    ParamSet params;
    std::map<std::string, double> ci_low;
    std::map<std::string, double> ci_high;
    double log_likelihood = 0.0;
};

struct StabilityTable {
    ModelSpec spec;
    StabilityDirection direction = StabilityDirection::expanding_end;
    int min_obs = 0;
    bool parallel = false;
    std::vector<StabilityRow> rows;
};

/// z-value for the stability bands.
inline constexpr double kStabilityZ = 1.96;

/*
 * Refits the model on nested sub-periods. min_obs counts observations of the
 * modelled series in the sub-period. Sequential mode warm-starts each row
 * from its neighbour; parallel mode fits rows independently on
 * `threads` workers (0 = hardware concurrency).
 */
StabilityTable recursive_fit(const ModelSpec& spec, const DataBundle& data, StabilityDirection direction,
                             int min_obs, const FitOptions& options = {}, bool parallel = false,
                             unsigned threads = 0);

}  // namespace saesg
