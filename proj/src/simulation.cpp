#include "saesg/simulation.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <thread>

namespace saesg {

namespace {

bool has(const CascadeParams& m, SeriesKind k) { return m.count(k) > 0; }

bool ilb_uses_long(Variant v) { return v == Variant::both_rates || v == Variant::long_only; }
bool ilb_uses_short(Variant v) {
    return v == Variant::both_rates || v == Variant::short_with_mean || v == Variant::short_no_mean;
}

void check_dependencies_impl(const std::map<SeriesKind, Variant>& present) {
    auto need = [&](SeriesKind who, SeriesKind upstream) {
        if (present.count(who) && !present.count(upstream)) {
            throw SimulationError("the " + to_string(who) + " model needs the " + to_string(upstream) +
                                  " model upstream in the cascade");
        }
    };
    for (const auto& [kind, _] : present) {
        if (kind != SeriesKind::inflation) need(kind, SeriesKind::inflation);
    }
    need(SeriesKind::dividend, SeriesKind::dividend_yield);
    need(SeriesKind::short_rate, SeriesKind::long_rate);
    if (const auto it = present.find(SeriesKind::ilb); it != present.end()) {
        if (ilb_uses_long(it->second)) need(SeriesKind::ilb, SeriesKind::long_rate);
        if (ilb_uses_short(it->second)) need(SeriesKind::ilb, SeriesKind::short_rate);
    }
}

double yield_scale(const ModelSpec& spec) { return spec.yield_unit == Unit::rate_percent ? 100.0 : 1.0; }

}  // namespace

void check_dependencies(const CascadeParams& models) {
    std::map<SeriesKind, Variant> present;
    for (const auto& [kind, m] : models) present[kind] = m.spec.variant;
    check_dependencies_impl(present);
}

CascadeState neutral_state(const CascadeParams& models) {
    check_dependencies(models);
    CascadeState s;
    const double mu_q = models.at(SeriesKind::inflation).params.get("mu_q");
    s.delta_q_prev = mu_q;

    if (has(models, SeriesKind::dividend_yield)) {
        const auto& m = models.at(SeriesKind::dividend_yield);
        const bool ma = m.spec.variant == Variant::ma_inflation;
        s.ym_prev = ma ? mu_q : 0.0;
        s.yn_prev = 0.0;
        s.eps_y_prev = 0.0;
        s.yield_prev = std::exp((ma ? mu_q : 0.0) + m.params.get("mu_y")) / yield_scale(m.spec);
    }
    if (has(models, SeriesKind::dividend)) {
        s.dm_prev = mu_q;
        s.eps_d_prev = 0.0;
    }
    if (has(models, SeriesKind::long_rate)) {
        const auto& m = models.at(SeriesKind::long_rate);
        const bool ma = m.spec.variant == Variant::ma_inflation;
        s.cm_prev = ma ? mu_q : 0.0;
        s.cn_prev = 0.0;
        s.delta_c_prev = (ma ? m.params.get("w_c") * mu_q : 0.0) + std::exp(m.params.get("ln_mu_c"));
    }
    if (has(models, SeriesKind::short_rate)) {
        const double mu_b = models.at(SeriesKind::short_rate).params.get("mu_b");
        s.bd_prev = mu_b;
        s.delta_b_prev = s.delta_c_prev * std::exp(-mu_b);
    }
    if (has(models, SeriesKind::ilb)) {
        const auto& p = models.at(SeriesKind::ilb).params;
        const double regress = p.get_or("c_r", 0.0) * s.delta_c_prev + p.get_or("b_r", 0.0) * s.delta_b_prev;
        s.delta_r_prev = p.get_or("mu_r", 0.0) + regress / (1.0 - p.get("a_r"));
    }
    return s;
}

CascadeState initial_state_from_fits(const std::map<SeriesKind, FitResult>& fits) {
    std::map<SeriesKind, Variant> present;
    for (const auto& [kind, f] : fits) present[kind] = f.spec.variant;
    check_dependencies_impl(present);

    std::optional<int> final_year;
    for (const auto& [kind, f] : fits) {
        const int year = f.residuals.end_year();
        if (final_year && *final_year != year) {
            throw SimulationError("fits end in different years: " + to_string(kind) + " ends in " +
                                  std::to_string(year) + ", expected " + std::to_string(*final_year));
        }
        final_year = year;
    }

    CascadeState s;
    for (const auto& [kind, f] : fits) {
        const CascadeState& fs = f.filter.final_state;
        switch (kind) {
            case SeriesKind::inflation: s.delta_q_prev = fs.delta_q_prev; break;
            case SeriesKind::dividend_yield:
                s.ym_prev = fs.ym_prev;
                s.yn_prev = fs.yn_prev;
                s.yield_prev = fs.yield_prev;
                s.eps_y_prev = fs.eps_y_prev;
                break;
            case SeriesKind::dividend:
                s.dm_prev = fs.dm_prev;
                s.eps_d_prev = fs.eps_d_prev;
                break;
            case SeriesKind::long_rate:
                s.cm_prev = fs.cm_prev;
                s.cn_prev = fs.cn_prev;
                s.delta_c_prev = fs.delta_c_prev;
                break;
            case SeriesKind::short_rate: s.bd_prev = fs.bd_prev; break;
            case SeriesKind::ilb: s.delta_r_prev = fs.delta_r_prev; break;
        }
    }
    if (fits.count(SeriesKind::short_rate)) s.delta_b_prev = s.delta_c_prev * std::exp(-s.bd_prev);
    return s;
}

CascadeState initial_state(const std::map<SeriesKind, FitResult>& fits, InitialStateMode mode) {
    if (mode == InitialStateMode::from_fit) return initial_state_from_fits(fits);
    CascadeParams models;
    for (const auto& [kind, f] : fits) models[kind] = SubModel{f.spec, f.params};
    return neutral_state(models);
}

// ---------------------------------------------------------------- simulate

ScenarioSet simulate(const CascadeParams& models, const CascadeState& initial, const SimulationOptions& options) {
    if (options.horizon < 1) throw SimulationError("horizon must be at least 1");
    if (options.n_paths < 1) throw SimulationError("n_paths must be at least 1");
    if (!has(models, SeriesKind::inflation)) throw SimulationError("the inflation model is required");
    check_dependencies(models);
    if (!initial.is_finite()) throw SimulationError("initial state is not finite");

    const bool with_yield = has(models, SeriesKind::dividend_yield);
    const bool with_dividend = has(models, SeriesKind::dividend);
    const bool with_long = has(models, SeriesKind::long_rate);
    const bool with_short = has(models, SeriesKind::short_rate);
    const bool with_ilb = has(models, SeriesKind::ilb);
    if (with_dividend && !(initial.yield_prev > 0.0)) {
        throw SimulationError("initial dividend yield must be positive to anchor the share-price index");
    }

    ScenarioSet out;
    out.seed = options.seed;
    out.n_paths = options.n_paths;
    out.horizon = options.horizon;
    out.start_year = options.start_year;
    out.initial_state = initial;
    out.models = models;

    auto add = [&](const char* name) -> PathMatrix& {
        return out.series.emplace(name, PathMatrix(options.n_paths, options.horizon)).first->second;
    };
    PathMatrix& inflation = add("inflation");
    const bool levels = options.index_levels;
    PathMatrix* cpi = levels ? &add("cpi_index") : nullptr;
    PathMatrix* yield = with_yield ? &add("dividend_yield") : nullptr;
    PathMatrix* growth = with_dividend ? &add("dividend_growth") : nullptr;
    PathMatrix* dividend_index = with_dividend && levels ? &add("dividend_index") : nullptr;
    PathMatrix* price = with_dividend && levels ? &add("share_price_index") : nullptr;
    PathMatrix* long_rate = with_long ? &add("long_rate") : nullptr;
    PathMatrix* spread = with_short ? &add("log_spread") : nullptr;
    PathMatrix* short_rate = with_short ? &add("short_rate") : nullptr;
    PathMatrix* ilb = with_ilb ? &add("ilb_rate") : nullptr;

    const SubModel& inflation_model = models.at(SeriesKind::inflation);

    auto run_path = [&](long path) {
        const NormalStream z(options.seed, static_cast<std::uint64_t>(path));
        CascadeState s = initial;
        double q_level = options.base_cpi;
        double d_level = options.base_price * initial.yield_prev;
        for (int k = 0; k < options.horizon; ++k) {
            const auto year = static_cast<std::uint32_t>(k);
            StepResult r = step_inflation(inflation_model.params, s, z(SeriesKind::inflation, year));
            const double dq = r.value;
            s = r.state;
            q_level *= std::exp(dq);
            inflation(path, k) = dq;
            if (levels) (*cpi)(path, k) = q_level;

            double y = 0.0;
            if (with_yield) {
                const double eps_y_lag = s.eps_y_prev;
                const auto& m = models.at(SeriesKind::dividend_yield);
                r = step_dividend_yields(m.spec, m.params, s, dq, z(SeriesKind::dividend_yield, year));
                y = r.value;
                s = r.state;
                (*yield)(path, k) = y;
                if (with_dividend) {
                    // Dividends respond to last year's yield residual, not this year's.
                    CascadeState lagged = s;
                    lagged.eps_y_prev = eps_y_lag;
                    const auto& md = models.at(SeriesKind::dividend);
                    r = step_dividends(md.spec, md.params, lagged, dq, z(SeriesKind::dividend, year));
                    r.state.eps_y_prev = s.eps_y_prev;
                    s = r.state;
                    d_level *= std::exp(r.value);
                    (*growth)(path, k) = r.value;
                    if (levels) {
                        (*dividend_index)(path, k) = d_level;
                        (*price)(path, k) = share_price(d_level, y);
                    }
                }
            }
            double dc = 0.0;
            double db = 0.0;
            if (with_long) {
                const auto& m = models.at(SeriesKind::long_rate);
                r = step_long_rates(m.spec, m.params, s, dq, z(SeriesKind::long_rate, year));
                dc = r.value;
                s = r.state;
                (*long_rate)(path, k) = dc;
            }
            if (with_short) {
                const auto& m = models.at(SeriesKind::short_rate);
                r = step_short_rates(m.params, s, dc, z(SeriesKind::short_rate, year));
                db = r.value;
                s = r.state;
                (*short_rate)(path, k) = db;
                (*spread)(path, k) = s.bd_prev;
            }
            if (with_ilb) {
                const auto& m = models.at(SeriesKind::ilb);
                r = step_ilb(m.spec, m.params, s, dc, db, z(SeriesKind::ilb, year));
                s = r.state;
                (*ilb)(path, k) = r.value;
            }
            if (!s.is_finite() || (levels && (!std::isfinite(q_level) || !std::isfinite(d_level)))) {
                throw SimulationError("non-finite value on path " + std::to_string(path) + " in projection year " +
                                      std::to_string(options.start_year + k));
            }
        }
    };

    const unsigned workers =
        std::max(1u, options.threads ? options.threads : std::thread::hardware_concurrency());
    if (workers == 1 || options.n_paths < 2) {
        for (long p = 0; p < options.n_paths; ++p) run_path(p);
        return out;
    }

    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const long chunk = (options.n_paths + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const long begin = static_cast<long>(w) * chunk;
        const long end = std::min(options.n_paths, begin + chunk);
        pool.emplace_back([&, w, begin, end] {
            try {
                for (long p = begin; p < end; ++p) run_path(p);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

// --------------------------------------------------------------------- fan

double empirical_quantile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw SimulationError("empirical_quantile: empty sample");
    const double n = static_cast<double>(sorted.size());
    const double rank = std::clamp(p * (n + 1.0), 1.0, n);
    const auto lower = static_cast<std::size_t>(std::floor(rank));
    const double frac = rank - static_cast<double>(lower);
    if (lower >= sorted.size()) return sorted.back();
    return sorted[lower - 1] + frac * (sorted[lower] - sorted[lower - 1]);
}

FanTable fan(const ScenarioSet& scenarios, const std::vector<double>& levels) {
    std::vector<double> probs = {0.5};
    for (double level : levels) {
        if (!(level > 0.0 && level < 1.0)) throw SimulationError("fan levels must lie in (0, 1)");
        const double tail = (1.0 - level) / 2.0;
        // at least five expected draws beyond each tail quantile
        if (static_cast<double>(scenarios.n_paths) * tail < 5.0 - 1e-9) {
            throw SimulationError("too few paths (" + std::to_string(scenarios.n_paths) + ") for a " +
                                  std::to_string(level * 100.0) + "% interval");
        }
        probs.push_back(tail);
        probs.push_back(1.0 - tail);
    }
    std::sort(probs.begin(), probs.end());
    probs.erase(std::unique(probs.begin(), probs.end()), probs.end());

    FanTable table;
    table.levels = levels;
    std::vector<double> column(static_cast<std::size_t>(scenarios.n_paths));
    for (const auto& [name, m] : scenarios.series) {
        auto& rows = table.series[name];
        for (int k = 0; k < scenarios.horizon; ++k) {
            for (long p = 0; p < scenarios.n_paths; ++p) column[static_cast<std::size_t>(p)] = m(p, k);
            std::sort(column.begin(), column.end());
            FanRow row;
            row.year = scenarios.start_year + k;
            for (double pr : probs) row.quantiles[pr] = empirical_quantile(column, pr);
            row.mean = m.col(k).mean();
            rows.push_back(std::move(row));
        }
    }
    return table;
}

// ---------------------------------------------------------------- backtest

std::map<SeriesKind, FitResult> fit_cascade(const std::map<SeriesKind, ModelSpec>& specs, DataBundle data,
                                            const FitOptions& options, std::map<SeriesKind, std::string>* failures) {
    std::map<SeriesKind, FitResult> fits;
    for (SeriesKind kind : kAllSeries) {
        const auto it = specs.find(kind);
        if (it == specs.end()) continue;
        try {
            if (kind == SeriesKind::dividend) {
                if (!specs.count(SeriesKind::dividend_yield)) {
                    throw SimulationError(
                        "the dividend model needs the dividend_yield model upstream in the cascade "
                        "(it consumes the dividend-yield residuals)");
                }
                if (!fits.count(SeriesKind::dividend_yield)) {
                    throw SimulationError("the dividend model cannot be fitted because the dividend_yield fit failed");
                }
            }
            FitResult r = fit(it->second, data, options);
            if (kind == SeriesKind::dividend_yield) data.yield_residuals = r.residuals;
            fits.emplace(kind, std::move(r));
        } catch (const std::exception& e) {
            if (!failures) throw;
            (*failures)[kind] = e.what();
        }
    }
    return fits;
}

BacktestReport backtest(const DataBundle& data, const BacktestOptions& options) {
    if (!data.inflation) throw SimulationError("backtest needs the inflation series");
    if (options.split_year >= data.inflation->end_year()) {
        throw SimulationError("split year " + std::to_string(options.split_year) +
                              " leaves no holdout observations");
    }
    if (options.horizon < 1) throw SimulationError("horizon must be at least 1");

    std::map<SeriesKind, ModelSpec> specs = options.specs;
    if (!options.include_ilb) specs.erase(SeriesKind::ilb);

    const DataBundle truncated = data.slice(INT_MIN, options.split_year);
    BacktestReport report;
    report.split_year = options.split_year;
    report.fits = fit_cascade(specs, truncated, options.fit_options);
    for (const auto& [kind, values] : options.overrides) {
        auto it = report.fits.find(kind);
        if (it == report.fits.end()) continue;
        for (const auto& [name, value] : values) it->second.params.set(name, value);
    }

    CascadeParams models;
    for (const auto& [kind, f] : report.fits) models[kind] = SubModel{f.spec, f.params};
    const CascadeState initial = initial_state_from_fits(report.fits);

    SimulationOptions sim;
    sim.horizon = options.horizon;
    sim.n_paths = options.n_paths;
    sim.seed = options.seed;
    sim.start_year = options.split_year + 1;
    sim.threads = options.threads;
    if (data.cpi && data.cpi->contains(options.split_year)) sim.base_cpi = data.cpi->at_year(options.split_year);
    if (data.share_price && data.share_price->contains(options.split_year)) {
        sim.base_price = data.share_price->at_year(options.split_year);
    }
    const ScenarioSet scenarios = simulate(models, initial, sim);
    report.fan = fan(scenarios, {0.95, 0.99});

    std::map<std::string, std::optional<AnnualSeries>> observed = {
        {"inflation", data.inflation},
        {"cpi_index", data.cpi},
        {"dividend_yield", data.dividend_yield},
        {"dividend_growth", data.dividend_growth},
        {"dividend_index", data.dividends},
        {"share_price_index", data.share_price},
        {"long_rate", data.long_rate},
        {"short_rate", data.short_rate},
        {"ilb_rate", data.ilb_rate},
    };
    if (data.long_rate && data.short_rate) observed["log_spread"] = data.spread();

    for (const auto& [name, rows] : report.fan.series) {
        const auto obs = observed.find(name);
        if (obs == observed.end() || !obs->second) continue;
        auto& cells = report.cells[name];
        int in95 = 0;
        int in99 = 0;
        for (const FanRow& row : rows) {
            if (!obs->second->contains(row.year)) continue;
            BacktestCell c;
            c.year = row.year;
            c.observed = obs->second->at_year(row.year);
            c.lo95 = row.lower(0.95);
            c.hi95 = row.upper(0.95);
            c.lo99 = row.lower(0.99);
            c.hi99 = row.upper(0.99);
            c.inside_95 = c.observed >= c.lo95 && c.observed <= c.hi95;
            c.inside_99 = c.observed >= c.lo99 && c.observed <= c.hi99;
            in95 += c.inside_95;
            in99 += c.inside_99;
            cells.push_back(c);
        }
        if (!cells.empty()) {
            report.coverage_95[name] = static_cast<double>(in95) / static_cast<double>(cells.size());
            report.coverage_99[name] = static_cast<double>(in99) / static_cast<double>(cells.size());
        } else {
            report.cells.erase(name);
        }
    }
    return report;
}

}  // namespace saesg
