#include "saesg/models.hpp"

#include <cmath>

namespace saesg {

namespace {

void require_length(const AnnualSeries& s, Eigen::Index n, const char* what) {
    if (s.size() < n) {
        throw ModelError(std::string(what) + ": need at least " + std::to_string(n) + " observations, got " +
                         std::to_string(s.size()));
    }
}

double yield_scale(const ModelSpec& spec) { return spec.yield_unit == Unit::rate_percent ? 100.0 : 1.0; }

// Collects per-year traces without repeated map lookups.
struct Trace {
    explicit Trace(int start, Eigen::Index n) : start(start), n(n) {}
    Eigen::VectorXd& add(const std::string& name) {
        auto [it, _] = columns.emplace(name, Eigen::VectorXd::Zero(n));
        return it->second;
    }
    std::map<std::string, AnnualSeries> finish() const {
        std::map<std::string, AnnualSeries> out;
        for (const auto& [name, v] : columns) out.emplace(name, AnnualSeries(start, v));
        return out;
    }
    int start;
    Eigen::Index n;
    std::map<std::string, Eigen::VectorXd> columns;
};

}  // namespace

bool CascadeState::is_finite() const {
    for (double v : {delta_q_prev, ym_prev, yn_prev, yield_prev, eps_y_prev, dm_prev, eps_d_prev, cm_prev,
                     cn_prev, delta_c_prev, bd_prev, delta_b_prev, delta_r_prev}) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

// ---------------------------------------------------------------- inflation

FilterOutput filter_inflation(const ParamSet& params, const AnnualSeries& delta_q) {
    require_length(delta_q, 2, "filter_inflation");
    const double mu = params.get("mu_q");
    const double a = params.get("a_q");

    const Eigen::Index n = delta_q.size();
    const Eigen::VectorXd& x = delta_q.values();
    Eigen::VectorXd eps = (x.tail(n - 1).array() - mu) - a * (x.head(n - 1).array() - mu);

    FilterOutput out;
    out.residuals = AnnualSeries(delta_q.start_year() + 1, std::move(eps));
    out.start_state.delta_q_prev = x(0);
    out.final_state.delta_q_prev = x(n - 1);
    return out;
}

StepResult step_inflation(const ParamSet& params, const CascadeState& state, double z) {
    const double mu = params.get("mu_q");
    const double a = params.get("a_q");
    const double sigma = params.get("sigma_q");
    const double dq = mu + a * (state.delta_q_prev - mu) + sigma * z;
    CascadeState next = state;
    next.delta_q_prev = dq;
    return {dq, next};
}

// ----------------------------------------------------------- dividend yield

FilterOutput filter_dividend_yields(const ModelSpec& spec, const ParamSet& params, const AnnualSeries& yield,
                                    const AnnualSeries& delta_q) {
    const bool with_inflation = spec.variant == Variant::ma_inflation;
    const auto [lo, hi] = with_inflation ? common_years({&yield, &delta_q})
                                         : std::pair{yield.start_year(), yield.end_year()};
    const AnnualSeries y = yield.slice(lo, hi);
    require_length(y, 2, "filter_dividend_yields");

    const double w = params.get_or("w_y", 0.0);
    const double d = params.get_or("d_y", 0.0);
    const double mu = params.get("mu_y");
    const double a = params.get("a_y");
    const double scale = yield_scale(spec);

    const Eigen::Index n = y.size();
    Trace trace(lo, n);
    Eigen::VectorXd& ym = trace.add("ym");
    Eigen::VectorXd& yn = trace.add("yn");
    Eigen::VectorXd eps(n - 1);

    double ym_prev = 0.0;
    if (with_inflation) ym_prev = spec.ma_init.value_or(delta_q.at_year(lo));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(y[i] > 0.0)) {
            throw ModelError("filter_dividend_yields: non-positive yield in " + std::to_string(lo + i));
        }
        double yq = 0.0;
        if (with_inflation) {
            const double dq = delta_q.at_year(lo + static_cast<int>(i));
            ym(i) = d * dq + (1.0 - d) * ym_prev;
            yq = w * ym(i) + (1.0 - w) * dq;
            ym_prev = ym(i);
        }
        yn(i) = std::log(scale * y[i]) - yq - mu;
        if (i > 0) eps(i - 1) = yn(i) - a * yn(i - 1);
    }

    FilterOutput out;
    out.residuals = AnnualSeries(lo + 1, eps);
    out.start_state.ym_prev = ym(0);
    out.start_state.yn_prev = yn(0);
    out.start_state.yield_prev = y[0];
    out.final_state.ym_prev = ym(n - 1);
    out.final_state.yn_prev = yn(n - 1);
    out.final_state.yield_prev = y[n - 1];
    out.final_state.eps_y_prev = eps(n - 2);
    out.trace = trace.finish();
    return out;
}

StepResult step_dividend_yields(const ModelSpec& spec, const ParamSet& params, const CascadeState& state,
                                double delta_q_now, double z) {
    const double mu = params.get("mu_y");
    const double a = params.get("a_y");
    const double sigma = params.get("sigma_y");

    CascadeState next = state;
    double yq = 0.0;
    if (spec.variant == Variant::ma_inflation) {
        const double w = params.get("w_y");
        const double d = params.get("d_y");
        next.ym_prev = d * delta_q_now + (1.0 - d) * state.ym_prev;
        yq = w * next.ym_prev + (1.0 - w) * delta_q_now;
    }
    const double eps = sigma * z;
    next.yn_prev = a * state.yn_prev + eps;
    next.eps_y_prev = eps;
    const double y = std::exp(yq + mu + next.yn_prev) / yield_scale(spec);
    next.yield_prev = y;
    return {y, next};
}

// ---------------------------------------------------------------- dividends

FilterOutput filter_dividends(const ModelSpec& spec, const ParamSet& params, const AnnualSeries& delta_d,
                              const AnnualSeries& delta_q, const AnnualSeries& eps_y) {
    const bool uses_inflation = spec.variant != Variant::yield_only;
    const auto [lo, hi] = uses_inflation ? common_years({&delta_d, &delta_q})
                                         : std::pair{delta_d.start_year(), delta_d.end_year()};
    const AnnualSeries dd = delta_d.slice(lo, hi);
    require_length(dd, 2, "filter_dividends");

    const double w = params.get_or("w_d", 0.0);
    const double d = params.get_or("d_d", 0.0);
    const double q = params.get_or("q_d", 0.0);
    const double mu = params.get("mu_d");
    const double y_d = params.get("y_d");
    const double k_d = params.get("k_d");

    const Eigen::Index n = dd.size();
    Trace trace(lo, n);
    Eigen::VectorXd& dm = trace.add("dm");
    Eigen::VectorXd& dq_effect = trace.add("d_q");
    Eigen::VectorXd eps(n);

    const double dm_init = uses_inflation ? spec.ma_init.value_or(delta_q.at_year(lo)) : 0.0;
    double dm_prev = dm_init;
    double eps_d_lag = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int year = lo + static_cast<int>(i);
        double inflation_term = 0.0;
        if (spec.variant == Variant::ma_inflation) {
            const double dq = delta_q.at_year(year);
            dm(i) = d * dq + (1.0 - d) * dm_prev;
            inflation_term = w * dm(i) + (1.0 - w) * dq;
            dm_prev = dm(i);
        } else if (spec.variant == Variant::simultaneous_inflation) {
            inflation_term = q * delta_q.at_year(year);
        }
        dq_effect(i) = inflation_term;
        const double eps_y_lag = (i > 0 && eps_y.contains(year - 1)) ? eps_y.at_year(year - 1) : 0.0;
        eps(i) = dd[i] - inflation_term - mu - y_d * eps_y_lag - k_d * eps_d_lag;
        eps_d_lag = eps(i);
    }

    FilterOutput out;
    out.residuals = AnnualSeries(lo, eps);
    out.start_state.dm_prev = dm_init;
    out.final_state.dm_prev = dm_prev;
    out.final_state.eps_d_prev = eps(n - 1);
    if (eps_y.contains(hi)) out.final_state.eps_y_prev = eps_y.at_year(hi);
    out.trace = trace.finish();
    return out;
}

StepResult step_dividends(const ModelSpec& spec, const ParamSet& params, const CascadeState& state,
                          double delta_q_now, double z) {
    const double mu = params.get("mu_d");
    const double y_d = params.get("y_d");
    const double k_d = params.get("k_d");
    const double sigma = params.get("sigma_d");

    CascadeState next = state;
    double inflation_term = 0.0;
    if (spec.variant == Variant::ma_inflation) {
        const double w = params.get("w_d");
        const double d = params.get("d_d");
        next.dm_prev = d * delta_q_now + (1.0 - d) * state.dm_prev;
        inflation_term = w * next.dm_prev + (1.0 - w) * delta_q_now;
    } else if (spec.variant == Variant::simultaneous_inflation) {
        inflation_term = params.get("q_d") * delta_q_now;
    }
    const double eps = sigma * z;
    const double dd = inflation_term + mu + y_d * state.eps_y_prev + k_d * state.eps_d_prev + eps;
    next.eps_d_prev = eps;
    return {dd, next};
}

double share_price(double dividend, double yield) {
    if (!(yield > 0.0)) throw ModelError("share_price: dividend yield must be positive");
    return dividend / yield;
}

// --------------------------------------------------------------- long rates

FilterOutput filter_long_rates(const ModelSpec& spec, const ParamSet& params, const AnnualSeries& delta_c,
                               const AnnualSeries& delta_q) {
    const bool with_inflation = spec.variant == Variant::ma_inflation;
    const auto [lo, hi] = with_inflation ? common_years({&delta_c, &delta_q})
                                         : std::pair{delta_c.start_year(), delta_c.end_year()};
    const AnnualSeries dc = delta_c.slice(lo, hi);
    require_length(dc, 2, "filter_long_rates");

    const double w = params.get_or("w_c", 0.0);
    const double d = params.get_or("d_c", 0.0);
    const double ln_mu = params.get("ln_mu_c");
    const double a = params.get("a_c");

    const Eigen::Index n = dc.size();
    Trace trace(lo, n);
    Eigen::VectorXd& cm = trace.add("cm");
    Eigen::VectorXd& cr = trace.add("cr");
    Eigen::VectorXd& cn = trace.add("cn");
    Eigen::VectorXd eps(n - 1);

    double cm_prev = with_inflation ? spec.ma_init.value_or(delta_q.at_year(lo)) : 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int year = lo + static_cast<int>(i);
        if (with_inflation) {
            cm(i) = d * delta_q.at_year(year) + (1.0 - d) * cm_prev;
            cm_prev = cm(i);
        }
        cr(i) = dc[i] - w * cm(i);
        if (!(cr(i) > 0.0)) {
            throw ModelError("filter_long_rates: real component cr(t) = " + std::to_string(cr(i)) +
                             " is not positive in " + std::to_string(year) +
                             (spec.ma_init ? "" : "; the moving average starts at the first observed inflation, set ma_init"));
        }
        cn(i) = std::log(cr(i)) - ln_mu;
        if (i > 0) eps(i - 1) = cn(i) - a * cn(i - 1);
    }

    FilterOutput out;
    out.residuals = AnnualSeries(lo + 1, eps);
    out.start_state.cm_prev = cm(0);
    out.start_state.cn_prev = cn(0);
    out.start_state.delta_c_prev = dc[0];
    out.final_state.cm_prev = cm(n - 1);
    out.final_state.cn_prev = cn(n - 1);
    out.final_state.delta_c_prev = dc[n - 1];
    out.trace = trace.finish();
    return out;
}

StepResult step_long_rates(const ModelSpec& spec, const ParamSet& params, const CascadeState& state,
                           double delta_q_now, double z) {
    const double ln_mu = params.get("ln_mu_c");
    const double a = params.get("a_c");
    const double sigma = params.get("sigma_c");

    CascadeState next = state;
    double inflation_part = 0.0;
    if (spec.variant == Variant::ma_inflation) {
        const double w = params.get("w_c");
        const double d = params.get("d_c");
        next.cm_prev = d * delta_q_now + (1.0 - d) * state.cm_prev;
        inflation_part = w * next.cm_prev;
    }
    next.cn_prev = a * state.cn_prev + sigma * z;
    const double dc = inflation_part + std::exp(ln_mu + next.cn_prev);
    next.delta_c_prev = dc;
    return {dc, next};
}

// -------------------------------------------------------------- short rates

FilterOutput filter_short_rates(const ParamSet& params, const AnnualSeries& spread) {
    require_length(spread, 2, "filter_short_rates");
    const double mu = params.get("mu_b");
    const double a = params.get("a_b");
    const Eigen::Index n = spread.size();
    const Eigen::VectorXd& bd = spread.values();
    Eigen::VectorXd eps = (bd.tail(n - 1).array() - mu) - a * (bd.head(n - 1).array() - mu);

    FilterOutput out;
    out.residuals = AnnualSeries(spread.start_year() + 1, std::move(eps));
    out.start_state.bd_prev = bd(0);
    out.final_state.bd_prev = bd(n - 1);
    return out;
}

StepResult step_short_rates(const ParamSet& params, const CascadeState& state, double delta_c_now, double z) {
    const double mu = params.get("mu_b");
    const double a = params.get("a_b");
    const double sigma = params.get("sigma_b");
    CascadeState next = state;
    next.bd_prev = mu + a * (state.bd_prev - mu) + sigma * z;
    const double db = delta_c_now * std::exp(-next.bd_prev);
    next.delta_b_prev = db;
    return {db, next};
}

// ---------------------------------------------------------------------- ILB

namespace {

struct IlbTerms {
    double mu;
    double a;
    double c;
    double b;
    bool uses_long;
    bool uses_short;
};

IlbTerms ilb_terms(const ModelSpec& spec, const ParamSet& params) {
    IlbTerms t{};
    t.mu = params.get_or("mu_r", 0.0);
    t.a = params.get("a_r");
    t.c = params.get_or("c_r", 0.0);
    t.b = params.get_or("b_r", 0.0);
    t.uses_long = spec.variant == Variant::both_rates || spec.variant == Variant::long_only;
    t.uses_short = spec.variant == Variant::both_rates || spec.variant == Variant::short_with_mean ||
                   spec.variant == Variant::short_no_mean;
    return t;
}

}  // namespace

FilterOutput filter_ilb(const ModelSpec& spec, const ParamSet& params, const AnnualSeries& delta_r,
                        const AnnualSeries& delta_c, const AnnualSeries& delta_b) {
    const IlbTerms t = ilb_terms(spec, params);
    int lo = delta_r.start_year();
    int hi = delta_r.end_year();
    if (t.uses_long) std::tie(lo, hi) = common_years({&delta_r, &delta_c});
    if (t.uses_short) {
        const auto [blo, bhi] = common_years({&delta_b});
        lo = std::max(lo, blo);
        hi = std::min(hi, bhi);
    }
    if (lo > hi) throw ModelError("filter_ilb: inputs do not overlap");
    const AnnualSeries dr = delta_r.slice(lo, hi);
    require_length(dr, 2, "filter_ilb");

    const Eigen::Index n = dr.size();
    Eigen::VectorXd eps(n - 1);
    for (Eigen::Index i = 1; i < n; ++i) {
        const int year = lo + static_cast<int>(i);
        double regress = 0.0;
        if (t.uses_long) regress += t.c * delta_c.at_year(year);
        if (t.uses_short) regress += t.b * delta_b.at_year(year);
        eps(i - 1) = dr[i] - t.mu - t.a * (dr[i - 1] - t.mu) - regress;
    }

    FilterOutput out;
    out.residuals = AnnualSeries(lo + 1, std::move(eps));
    out.start_state.delta_r_prev = dr[0];
    out.final_state.delta_r_prev = dr[n - 1];
    return out;
}

StepResult step_ilb(const ModelSpec& spec, const ParamSet& params, const CascadeState& state,
                    double delta_c_now, double delta_b_now, double z) {
    const IlbTerms t = ilb_terms(spec, params);
    const double sigma = params.get("sigma_r");
    double dr = t.mu + t.a * (state.delta_r_prev - t.mu) + sigma * z;
    if (t.uses_long) dr += t.c * delta_c_now;
    if (t.uses_short) dr += t.b * delta_b_now;
    CascadeState next = state;
    next.delta_r_prev = dr;
    return {dr, next};
}

}  // namespace saesg
