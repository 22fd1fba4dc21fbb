#include "saesg/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <future>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include "saesg/hessian.hpp"

namespace saesg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const AnnualSeries& require(const std::optional<AnnualSeries>& s, const char* name, const ModelSpec& spec) {
    if (!s) {
        throw EstimationError("model " + to_string(spec.series) + "/" + to_string(spec.variant) +
                              " needs the " + name + " series");
    }
    return *s;
}

std::optional<AnnualSeries> slice_optional(const std::optional<AnnualSeries>& s, int from, int to) {
    if (!s || s->empty()) return std::nullopt;
    if (to < s->start_year() || from > s->end_year()) return std::nullopt;
    return s->slice(from, to);
}

double mean_param_default(const Eigen::VectorXd& r) { return r.size() ? r.mean() : 0.0; }

double lag1(const Eigen::VectorXd& r) {
    if (r.size() < 3) return 0.0;
    const Eigen::VectorXd c = r.array() - r.mean();
    const double denom = c.squaredNorm();
    if (!(denom > 0.0)) return 0.0;
    return c.head(c.size() - 1).dot(c.tail(c.size() - 1)) / denom;
}

std::string mean_name(SeriesKind kind) {
    switch (kind) {
        case SeriesKind::inflation: return "mu_q";
        case SeriesKind::dividend_yield: return "mu_y";
        case SeriesKind::dividend: return "mu_d";
        case SeriesKind::long_rate: return "ln_mu_c";
        case SeriesKind::short_rate: return "mu_b";
        case SeriesKind::ilb: return "mu_r";
    }
    return {};
}

std::string ar_name(SeriesKind kind) {
    switch (kind) {
        case SeriesKind::inflation: return "a_q";
        case SeriesKind::dividend_yield: return "a_y";
        case SeriesKind::dividend: return "k_d";
        case SeriesKind::long_rate: return "a_c";
        case SeriesKind::short_rate: return "a_b";
        case SeriesKind::ilb: return "a_r";
    }
    return {};
}

double to_unconstrained(ParamRole role, double x) {
    switch (role) {
        case ParamRole::scale: return std::log(x);
        case ParamRole::autoregressive: return std::atanh(std::clamp(x, -0.999, 0.999));
        case ParamRole::weight: {
            const double p = std::clamp(x, 1e-6, 1.0 - 1e-6);
            return std::log(p / (1.0 - p));
        }
        case ParamRole::free: return x;
    }
    return x;
}

double to_natural(ParamRole role, double u) {
    switch (role) {
        case ParamRole::scale: return std::exp(u);
        case ParamRole::autoregressive: return std::tanh(u);
        case ParamRole::weight: return 1.0 / (1.0 + std::exp(-u));
        case ParamRole::free: return u;
    }
    return u;
}

// Maps the optimizer's vector onto a ParamSet. sigma is profiled out of the
// likelihood when it is free, so it never appears in the search vector.
struct FreeLayout {
    ModelSpec spec;
    std::vector<ParamInfo> layout;
    std::vector<std::size_t> search;  // indices into layout searched by Nelder-Mead
    std::vector<std::size_t> free;    // all non-fixed indices (for SEs)
    std::size_t sigma_index = 0;
    bool profile_sigma = false;

    explicit FreeLayout(const ModelSpec& s) : spec(s), layout(parameter_layout(s.series, s.variant)) {
        const std::string sig = sigma_name(s.series);
        for (std::size_t i = 0; i < layout.size(); ++i) {
            const bool fixed = s.fixed.count(layout[i].name) > 0;
            if (layout[i].name == sig) sigma_index = i;
            if (fixed) continue;
            free.push_back(i);
            if (layout[i].name == sig) {
                profile_sigma = true;
            } else {
                search.push_back(i);
            }
        }
    }

    ParamSet natural(const std::map<std::string, double>& values) const {
        return ParamSet::from_values(spec, values);
    }

    Eigen::VectorXd pack(const ParamSet& p) const {
        Eigen::VectorXd u(static_cast<Eigen::Index>(search.size()));
        for (std::size_t k = 0; k < search.size(); ++k) {
            const auto& info = layout[search[k]];
            u(static_cast<Eigen::Index>(k)) = to_unconstrained(info.role, p.get(info.name));
        }
        return u;
    }

    void unpack(const Eigen::VectorXd& u, ParamSet& p) const {
        for (std::size_t k = 0; k < search.size(); ++k) {
            const auto& info = layout[search[k]];
            p.parameters()[search[k]].value = to_natural(info.role, u(static_cast<Eigen::Index>(k)));
        }
    }
};

double gaussian_nll(const Eigen::VectorXd& eps, double sigma) {
    const double n = static_cast<double>(eps.size());
    return 0.5 * (n * std::log(2.0 * std::numbers::pi * sigma * sigma) + eps.squaredNorm() / (sigma * sigma));
}

// Concentrated objective: with sigma profiled out, sigma^2 = mean(eps^2).
double profiled_nll(const FreeLayout& fl, ParamSet& scratch, const Eigen::VectorXd& u, const DataBundle& data) {
    fl.unpack(u, scratch);
    for (std::size_t k : fl.search) {
        const auto& info = fl.layout[k];
        if (!std::isfinite(scratch.parameters()[k].value)) return kInf;
        if (info.role == ParamRole::autoregressive && !(std::abs(scratch.parameters()[k].value) < 1.0)) return kInf;
    }
    FilterOutput f;
    try {
        f = run_filter(fl.spec, scratch, data);
    } catch (const ModelError&) {
        return kInf;
    } catch (const DataError&) {
        return kInf;
    }
    const Eigen::VectorXd& eps = f.residuals.values();
    if (!eps.allFinite()) return kInf;
    if (fl.profile_sigma) {
        const double s2 = eps.squaredNorm() / static_cast<double>(eps.size());
        if (!(s2 > 0.0)) return kInf;
        return 0.5 * static_cast<double>(eps.size()) * (std::log(2.0 * std::numbers::pi * s2) + 1.0);
    }
    return gaussian_nll(eps, scratch.parameters()[fl.sigma_index].value);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

// ------------------------------------------------------------------ bundle

DataBundle DataBundle::slice(int from, int to) const {
    DataBundle out;
    out.inflation = slice_optional(inflation, from, to);
    out.dividend_yield = slice_optional(dividend_yield, from, to);
    out.dividend_growth = slice_optional(dividend_growth, from, to);
    out.long_rate = slice_optional(long_rate, from, to);
    out.short_rate = slice_optional(short_rate, from, to);
    out.ilb_rate = slice_optional(ilb_rate, from, to);
    out.yield_residuals = slice_optional(yield_residuals, from, to);
    out.cpi = slice_optional(cpi, from, to);
    out.share_price = slice_optional(share_price, from, to);
    out.dividends = slice_optional(dividends, from, to);
    return out;
}

AnnualSeries DataBundle::spread() const {
    if (!long_rate || !short_rate) throw EstimationError("log spread needs long and short rates");
    return log_spread(*long_rate, *short_rate);
}

AnnualSeries modelled_series(const ModelSpec& spec, const DataBundle& data) {
    switch (spec.series) {
        case SeriesKind::inflation: return require(data.inflation, "inflation", spec);
        case SeriesKind::dividend_yield: {
            AnnualSeries y = require(data.dividend_yield, "dividend_yield", spec);
            if (spec.variant == Variant::ma_inflation) {
                const auto [lo, hi] = common_years({&y, &require(data.inflation, "inflation", spec)});
                y = y.slice(lo, hi);
            }
            const double scale = spec.yield_unit == Unit::rate_percent ? 100.0 : 1.0;
            if ((y.values().array() <= 0.0).any()) throw DataError("non-positive dividend yield");
            return AnnualSeries(y.start_year(), (scale * y.values().array()).log().matrix(), Unit::log_value);
        }
        case SeriesKind::dividend: {
            const AnnualSeries& dd = require(data.dividend_growth, "dividend_growth", spec);
            if (spec.variant == Variant::yield_only) return dd;
            const auto [lo, hi] = common_years({&dd, &require(data.inflation, "inflation", spec)});
            return dd.slice(lo, hi);
        }
        case SeriesKind::long_rate: {
            const AnnualSeries& dc = require(data.long_rate, "long_rate", spec);
            if (spec.variant == Variant::ma_inflation) {
                const auto [lo, hi] = common_years({&dc, &require(data.inflation, "inflation", spec)});
                return dc.slice(lo, hi);
            }
            if ((dc.values().array() <= 0.0).any()) throw DataError("non-positive long rate");
            return AnnualSeries(dc.start_year(), dc.values().array().log().matrix(), Unit::log_value);
        }
        case SeriesKind::short_rate: return data.spread();
        case SeriesKind::ilb: {
            AnnualSeries dr = require(data.ilb_rate, "ilb_rate", spec);
            const bool uses_long = spec.variant == Variant::both_rates || spec.variant == Variant::long_only;
            const bool uses_short = spec.variant == Variant::both_rates || spec.variant == Variant::short_with_mean ||
                                    spec.variant == Variant::short_no_mean;
            if (uses_long) {
                const auto [lo, hi] = common_years({&dr, &require(data.long_rate, "long_rate", spec)});
                dr = dr.slice(lo, hi);
            }
            if (uses_short) {
                const auto [lo, hi] = common_years({&dr, &require(data.short_rate, "short_rate", spec)});
                dr = dr.slice(lo, hi);
            }
            return dr;
        }
    }
    throw EstimationError("unknown series");
}

FilterOutput run_filter(const ModelSpec& spec, const ParamSet& params, const DataBundle& data) {
    static const AnnualSeries kEmpty;
    switch (spec.series) {
        case SeriesKind::inflation: return filter_inflation(params, require(data.inflation, "inflation", spec));
        case SeriesKind::dividend_yield:
            return filter_dividend_yields(
                spec, params, require(data.dividend_yield, "dividend_yield", spec),
                spec.variant == Variant::ma_inflation ? require(data.inflation, "inflation", spec) : kEmpty);
        case SeriesKind::dividend:
            return filter_dividends(
                spec, params, require(data.dividend_growth, "dividend_growth", spec),
                spec.variant == Variant::yield_only ? kEmpty : require(data.inflation, "inflation", spec),
                data.yield_residuals ? *data.yield_residuals : kEmpty);
        case SeriesKind::long_rate:
            return filter_long_rates(
                spec, params, require(data.long_rate, "long_rate", spec),
                spec.variant == Variant::ma_inflation ? require(data.inflation, "inflation", spec) : kEmpty);
        case SeriesKind::short_rate: return filter_short_rates(params, data.spread());
        case SeriesKind::ilb:
            return filter_ilb(spec, params, require(data.ilb_rate, "ilb_rate", spec),
                              data.long_rate ? *data.long_rate : kEmpty,
                              data.short_rate ? *data.short_rate : kEmpty);
    }
    throw EstimationError("unknown series");
}

double neg_log_likelihood(const ModelSpec& spec, const ParamSet& params, const DataBundle& data,
                          std::string* reason) {
    if (!is_admissible(spec, params)) {
        if (reason) *reason = "parameters outside the admissible region";
        return kInf;
    }
    FilterOutput f;
    try {
        f = run_filter(spec, params, data);
    } catch (const ModelError& e) {
        if (reason) *reason = e.what();
        return kInf;
    } catch (const DataError& e) {
        if (reason) *reason = e.what();
        return kInf;
    }
    if (!f.residuals.values().allFinite()) {
        if (reason) *reason = "non-finite residual";
        return kInf;
    }
    return gaussian_nll(f.residuals.values(), params.get(sigma_name(spec.series)));
}

// ------------------------------------------------------------------- starts

std::map<std::string, double> initial_values(const ModelSpec& spec, const DataBundle& data) {
    // Provisional mixing weights; means and AR terms are then read off the
    // filtered deviations.
    std::map<std::string, double> v;
    for (const auto& info : parameter_layout(spec.series, spec.variant)) {
        v[info.name] = info.role == ParamRole::scale ? 1.0 : 0.0;
    }
    const std::map<std::string, double> mixing = {{"w_y", 0.0}, {"d_y", 0.5}, {"w_d", 0.0}, {"d_d", 0.5},
                                                  {"q_d", 1.0}, {"w_c", 1.0}, {"d_c", 0.13}};
    for (const auto& [name, value] : mixing) {
        if (v.count(name)) v[name] = value;
    }
    for (const auto& [name, value] : spec.fixed) v[name] = value;

    const std::string mean = mean_name(spec.series);
    const std::string ar = ar_name(spec.series);
    const std::string sig = sigma_name(spec.series);
    auto provisional = [&](const std::map<std::string, double>& values) {
        ParamSet p = ParamSet::from_values(spec, values);
        if (p.has(mean) && !p.at(mean).fixed) p.set(mean, 0.0);
        if (!p.at(ar).fixed) p.set(ar, 0.0);
        return run_filter(spec, p, data);
    };

    FilterOutput f;
    try {
        f = provisional(v);
    } catch (const ModelError&) {
        // Long rates: a unit inflation weight can push cr(t) negative on the
        // data; fall back to no inflation offset for the start.
        if (v.count("w_c") && !spec.fixed.count("w_c")) {
            v["w_c"] = 0.0;
            f = provisional(v);
        } else {
            throw;
        }
    }

    // Deviations used for the moments: the AR-level series where there is one.
    Eigen::VectorXd dev = f.residuals.values();
    if (spec.series == SeriesKind::dividend_yield) dev = f.trace.at("yn").values();
    if (spec.series == SeriesKind::long_rate) dev = f.trace.at("cn").values();
    if (spec.series == SeriesKind::ilb || spec.series == SeriesKind::inflation ||
        spec.series == SeriesKind::short_rate) {
        dev = modelled_series(spec, data).values();
    }

    const double a = std::clamp(lag1(dev), -0.9, 0.9);
    if (!spec.fixed.count(ar)) v[ar] = spec.series == SeriesKind::dividend ? 0.0 : a;
    if (v.count(mean) && !spec.fixed.count(mean)) {
        v[mean] = mean_param_default(dev);
    }
    if (!spec.fixed.count(sig)) {
        const Eigen::VectorXd c = dev.array() - dev.mean();
        const double sd = std::sqrt(c.squaredNorm() / std::max<Eigen::Index>(1, c.size()));
        const double ar_used = spec.series == SeriesKind::dividend ? 0.0 : a;
        v[sig] = std::max(sd * std::sqrt(std::max(1e-4, 1.0 - ar_used * ar_used)), 1e-6);
    }
    return v;
}

// --------------------------------------------------------------------- fit

FitResult fit(const ModelSpec& spec, const DataBundle& data, const FitOptions& options) {
    spec.validate();
    options.optimizer.validate();
    const FreeLayout fl(spec);

    const AnnualSeries target = modelled_series(spec, data);
    const long expected_obs = static_cast<long>(target.size()) - (spec.series == SeriesKind::dividend ? 0 : 1);
    if (expected_obs < static_cast<long>(fl.layout.size()) + 2) {
        throw EstimationError("insufficient data for " + to_string(spec.series) + ": " +
                              std::to_string(expected_obs) + " usable observations for " +
                              std::to_string(fl.layout.size()) + " parameters");
    }
    {
        // relative range: the mean of a constant series is not exact in floating point
        const auto& v = target.values();
        if (!(v.maxCoeff() - v.minCoeff() > 1e-12 * v.cwiseAbs().maxCoeff())) {
            throw EstimationError("modelled series for " + to_string(spec.series) + " has zero variance");
        }
    }

    const auto mom = initial_values(spec, data);
    std::vector<ParamSet> starts;
    auto start_from = [&](const std::map<std::string, double>& partial) {
        auto values = mom;
        for (const auto& [k, val] : partial) values[k] = val;
        return fl.natural(values);
    };
    if (options.include_default_starts) starts.push_back(fl.natural(mom));
    for (const auto& s : options.starts) starts.push_back(start_from(s));
    if (options.include_default_starts) {
        std::mt19937_64 rng(options.seed);
        const Eigen::VectorXd u0 = fl.pack(fl.natural(mom));
        for (int k = 1; k < options.n_starts; ++k) {
            Eigen::VectorXd u = u0;
            for (Eigen::Index i = 0; i < u.size(); ++i) {
                const double width = 0.5 * std::max(std::abs(u(i)), 0.2);
                u(i) += width * (2.0 * uniform01(rng) - 1.0);
            }
            ParamSet p = fl.natural(mom);
            fl.unpack(u, p);
            starts.push_back(p);
        }
    }
    if (starts.empty()) throw EstimationError("no starting values");

    ParamSet scratch = fl.natural(mom);
    auto objective = [&](const Eigen::VectorXd& u) { return profiled_nll(fl, scratch, u, data); };

    bool any_converged = false;
    bool have_best = false;
    MinimizeResult<double> best;
    long iterations = 0;
    for (const auto& start : starts) {
        const Eigen::VectorXd u0 = fl.pack(start);
        MinimizeResult<double> r;
        if (u0.size() == 0) {
            r.x = u0;
            r.f = objective(u0);
            r.converged = std::isfinite(r.f);
        } else {
            if (!std::isfinite(objective(u0))) continue;
            r = nelder_mead<double>(objective, u0, options.optimizer);
        }
        iterations += r.iterations;
        any_converged = any_converged || r.converged;
        if (!have_best || r.f < best.f || (r.f == best.f && r.converged && !best.converged)) {
            best = r;
            have_best = true;
        }
    }
    if (!have_best || !std::isfinite(best.f)) {
        throw EstimationError("likelihood is not finite at any starting point for " + to_string(spec.series));
    }
    if (!any_converged) {
        throw EstimationError("optimizer did not converge from any start for " + to_string(spec.series));
    }

    FitResult result;
    result.spec = spec;
    result.params = fl.natural(mom);
    fl.unpack(best.x, result.params);
    result.filter = run_filter(spec, result.params, data);
    const Eigen::VectorXd& eps = result.filter.residuals.values();
    if (fl.profile_sigma) {
        const double s = std::sqrt(eps.squaredNorm() / static_cast<double>(eps.size()));
        if (!(s > 0.0)) throw EstimationError("degenerate fit: zero residual variance");
        result.params.parameters()[fl.sigma_index].value = s;
    }
    result.converged = best.converged;
    result.iterations = iterations;
    result.n_obs = static_cast<long>(eps.size());
    result.log_likelihood = -neg_log_likelihood(spec, result.params, data);
    result.residuals = result.filter.residuals;
    const double sigma = result.params.parameters()[fl.sigma_index].value;
    result.standardized_residuals =
        AnnualSeries(result.residuals.start_year(), result.residuals.values() / sigma, Unit::rate_decimal);

    // Standard errors in natural space over every non-fixed parameter.
    if (!fl.free.empty()) {
        Eigen::VectorXd x(static_cast<Eigen::Index>(fl.free.size()));
        for (std::size_t k = 0; k < fl.free.size(); ++k) {
            x(static_cast<Eigen::Index>(k)) = result.params.parameters()[fl.free[k]].value;
        }
        ParamSet probe = result.params;
        auto nll = [&](const Eigen::VectorXd& v) {
            for (std::size_t k = 0; k < fl.free.size(); ++k) {
                probe.parameters()[fl.free[k]].value = v(static_cast<Eigen::Index>(k));
            }
            return neg_log_likelihood(spec, probe, data);
        };
        const auto se = standard_errors<double>(nll, x);
        if (se.std_errors) {
            for (std::size_t k = 0; k < fl.free.size(); ++k) {
                result.params.parameters()[fl.free[k]].std_error = (*se.std_errors)(static_cast<Eigen::Index>(k));
            }
        } else {
            result.se_warning = true;
        }
    }

    if (eps.size() >= 3) {
        try {
            result.diagnostics = diagnose_residuals(result.standardized_residuals.values(), options.diagnostic_lags);
        } catch (const DiagnosticsError&) {
            // leave defaults; residual series without variation
        }
    }
    return result;
}

// ---------------------------------------------------------------- stability

std::string to_string(StabilityDirection direction) {
    return direction == StabilityDirection::expanding_end ? "expanding_end" : "expanding_start";
}

StabilityDirection direction_from_string(const std::string& name) {
    if (name == "expanding_end") return StabilityDirection::expanding_end;
    if (name == "expanding_start") return StabilityDirection::expanding_start;
    throw EstimationError("unknown stability direction '" + name + "'");
}

namespace {

StabilityRow stability_row(const ModelSpec& spec, const DataBundle& data, int from, int to, int bound,
                           const FitOptions& options) {
    StabilityRow row;
    row.bound_year = bound;
    try {
        const FitResult r = fit(spec, data.slice(from, to), options);
        row.converged = r.converged;
        row.params = r.params;
        row.log_likelihood = r.log_likelihood;
        for (const auto& p : r.params.parameters()) {
            if (p.std_error) {
                row.ci_low[p.name] = p.value - kStabilityZ * *p.std_error;
                row.ci_high[p.name] = p.value + kStabilityZ * *p.std_error;
            }
        }
        if (r.se_warning) row.error = "singular information matrix; standard errors unavailable";
    } catch (const std::exception& e) {
        row.converged = false;
        row.error = e.what();
    }
    return row;
}

}  // namespace

StabilityTable recursive_fit(const ModelSpec& spec, const DataBundle& data, StabilityDirection direction,
                             int min_obs, const FitOptions& options, bool parallel, unsigned threads) {
    spec.validate();
    const auto n_params = static_cast<int>(parameter_layout(spec.series, spec.variant).size());
    if (min_obs < n_params + 2) {
        throw EstimationError("min_obs must be at least " + std::to_string(n_params + 2));
    }
    const AnnualSeries target = modelled_series(spec, data);
    const int first = target.start_year();
    const int last = target.end_year();
    if (min_obs > target.size()) {
        throw EstimationError("min_obs " + std::to_string(min_obs) + " exceeds the " +
                              std::to_string(target.size()) + " available observations");
    }

    struct Period {
        int from, to, bound;
    };
    std::vector<Period> periods;
    if (direction == StabilityDirection::expanding_end) {
        for (int end = first + min_obs - 1; end <= last; ++end) periods.push_back({first, end, end});
    } else {
        for (int start = last - min_obs + 1; start >= first; --start) periods.push_back({start, last, start});
    }

    StabilityTable table;
    table.spec = spec;
    table.direction = direction;
    table.min_obs = min_obs;
    table.parallel = parallel;
    table.rows.resize(periods.size());

    if (!parallel) {
        std::optional<std::map<std::string, double>> warm;
        for (std::size_t i = 0; i < periods.size(); ++i) {
            FitOptions opts = options;
            if (warm) {
                opts.starts = {*warm};
                opts.n_starts = 1;
            }
            table.rows[i] = stability_row(spec, data, periods[i].from, periods[i].to, periods[i].bound, opts);
            if (table.rows[i].converged) {
                std::map<std::string, double> w;
                for (const auto& p : table.rows[i].params.parameters()) w[p.name] = p.value;
                warm = w;
            }
        }
        return table;
    }

    const unsigned workers = std::max(1u, threads ? threads : std::thread::hardware_concurrency());
    std::vector<std::future<void>> jobs;
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < workers; ++w) {
        jobs.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next++; i < periods.size(); i = next++) {
                table.rows[i] = stability_row(spec, data, periods[i].from, periods[i].to, periods[i].bound, options);
            }
        }));
    }
    for (auto& j : jobs) j.get();
    return table;
}

}  // namespace saesg
