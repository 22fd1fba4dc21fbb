#pragma once

#include <map>
#include <string>

#include "saesg/model_spec.hpp"
#include "saesg/series.hpp"

namespace saesg {

/*
 * Everything needed to advance the cascade by one year. Levels of the
 * moving-average inflation states (ym, dm, cm) and the autoregressive
 * deviations (yn, cn, bd) carry over between years together with the lagged
 * residuals that feed the dividend model.
 */
struct CascadeState {
    double delta_q_prev = 0.0;

    double ym_prev = 0.0;
    double yn_prev = 0.0;
    double yield_prev = 0.0;  ///< decimal dividend yield
    double eps_y_prev = 0.0;

    double dm_prev = 0.0;
    double eps_d_prev = 0.0;

    double cm_prev = 0.0;
    double cn_prev = 0.0;
    double delta_c_prev = 0.0;

    double bd_prev = 0.0;
    double delta_b_prev = 0.0;

    double delta_r_prev = 0.0;

    bool is_finite() const;
};

/// Result of running a model backwards over data.
struct FilterOutput {
    /// Innovations eps(t), one per usable observation.
    AnnualSeries residuals;
    /// Latent variables per year (ym, yn, dm, d_q, cm, cr, cn as applicable).
    std::map<std::string, AnnualSeries> trace;
    /// State entering the first residual year; stepping from here with
    /// z = eps / sigma reproduces the data.
    CascadeState start_state;
    /// State after the last observed year.
    CascadeState final_state;
};

struct StepResult {
    double value;
    CascadeState state;
};

FilterOutput filter_inflation(const ParamSet& params, const AnnualSeries& delta_q);
StepResult step_inflation(const ParamSet& params, const CascadeState& state, double z);

/// `yield` is the decimal dividend yield; spec.yield_unit sets the scale of the log.
FilterOutput filter_dividend_yields(const ModelSpec& spec, const ParamSet& params,
                                    const AnnualSeries& yield, const AnnualSeries& delta_q);
/// Returns the decimal dividend yield.
StepResult step_dividend_yields(const ModelSpec& spec, const ParamSet& params, const CascadeState& state,
                                double delta_q_now, double z);

/// `eps_y` are the dividend-yield residuals; missing years contribute zero.
FilterOutput filter_dividends(const ModelSpec& spec, const ParamSet& params, const AnnualSeries& delta_d,
                              const AnnualSeries& delta_q, const AnnualSeries& eps_y);
/// Uses state.eps_y_prev as the lagged dividend-yield residual.
StepResult step_dividends(const ModelSpec& spec, const ParamSet& params, const CascadeState& state,
                          double delta_q_now, double z);

/// D / Y.
double share_price(double dividend, double yield);

FilterOutput filter_long_rates(const ModelSpec& spec, const ParamSet& params, const AnnualSeries& delta_c,
                               const AnnualSeries& delta_q);
StepResult step_long_rates(const ModelSpec& spec, const ParamSet& params, const CascadeState& state,
                           double delta_q_now, double z);

/// `spread` is bd(t) = ln(delta_c / delta_b).
FilterOutput filter_short_rates(const ParamSet& params, const AnnualSeries& spread);
StepResult step_short_rates(const ParamSet& params, const CascadeState& state, double delta_c_now, double z);

/// `delta_c` / `delta_b` may be empty when the variant does not use them.
FilterOutput filter_ilb(const ModelSpec& spec, const ParamSet& params, const AnnualSeries& delta_r,
                        const AnnualSeries& delta_c, const AnnualSeries& delta_b);
StepResult step_ilb(const ModelSpec& spec, const ParamSet& params, const CascadeState& state,
                    double delta_c_now, double delta_b_now, double z);

}  // namespace saesg
