#include "saesg/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace saesg {

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("truncated scenario file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void put_f64(std::ostream& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    put_u64(out, bits);
}

double get_f64(std::istream& in) {
    const std::uint64_t bits = get_u64(in);
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
}

json map_json(const std::map<int, double>& m) {
    json j = json::object();
    for (const auto& [k, v] : m) j[std::to_string(k)] = number_or_null(v);
    return j;
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

json to_json(const AnnualSeries& series) {
    json values = json::array();
    for (Eigen::Index i = 0; i < series.size(); ++i) values.push_back(number_or_null(series[i]));
    return {{"start_year", series.start_year()}, {"unit", to_string(series.unit())}, {"values", values}};
}

AnnualSeries series_from_json(const json& j) {
    const auto& values = j.at("values");
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = values[i].is_null() ? NAN : values[i].get<double>();
    }
    return AnnualSeries(j.at("start_year").get<int>(), v, unit_from_string(j.value("unit", "rate_decimal")));
}

json to_json(const ModelSpec& spec, const ParamSet& params) {
    json list = json::array();
    for (const auto& p : params.parameters()) {
        json entry = {{"name", p.name}, {"value", p.value}, {"fixed", p.fixed}};
        if (p.fixed) {
            entry["std_error"] = "fixed parameter";
        } else {
            entry["std_error"] = p.std_error ? json(*p.std_error) : json(nullptr);
        }
        list.push_back(entry);
    }
    json j = {{"series", to_string(spec.series)}, {"variant", to_string(spec.variant)}, {"parameters", list}};
    if (spec.series == SeriesKind::dividend_yield) j["yield_unit"] = to_string(spec.yield_unit);
    if (spec.ma_init) j["ma_init"] = *spec.ma_init;
    return j;
}

SubModel submodel_from_json(const json& j) {
    SubModel m;
    m.spec.series = series_from_string(j.at("series").get<std::string>());
    m.spec.variant = variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("yield_unit")) m.spec.yield_unit = unit_from_string(j.at("yield_unit").get<std::string>());
    if (j.contains("ma_init") && !j.at("ma_init").is_null()) m.spec.ma_init = j.at("ma_init").get<double>();
    std::vector<Parameter> params;
    for (const auto& entry : j.at("parameters")) {
        Parameter p;
        p.name = entry.at("name").get<std::string>();
        p.value = entry.at("value").get<double>();
        p.fixed = entry.value("fixed", false);
        if (entry.contains("std_error") && entry.at("std_error").is_number()) {
            p.std_error = entry.at("std_error").get<double>();
        }
        if (p.fixed) m.spec.fixed[p.name] = p.value;
        params.push_back(std::move(p));
    }
    m.spec.validate();
    m.params = ParamSet(std::move(params));
    for (const auto& info : parameter_layout(m.spec.series, m.spec.variant)) {
        if (!m.params.has(info.name)) throw ModelError("parameter file lacks '" + info.name + "'");
    }
    return m;
}

json to_json(const DiagnosticsReport& report) {
    json flags_z = json::object();
    json flags_z2 = json::object();
    for (const auto& [k, v] : report.r_z_flag) flags_z[std::to_string(k)] = v;
    for (const auto& [k, v] : report.r_z2_flag) flags_z2[std::to_string(k)] = v;
    return {{"n", report.n},
            {"r_z", map_json(report.r_z)},
            {"r_z2", map_json(report.r_z2)},
            {"r_z_exceeds_2_over_sqrt_n", flags_z},
            {"r_z2_exceeds_2_over_sqrt_n", flags_z2},
            {"skewness", number_or_null(report.skewness)},
            {"kurtosis", number_or_null(report.kurtosis)},
            {"jarque_bera", number_or_null(report.jarque_bera)},
            {"jb_p_value", number_or_null(report.jb_p_value)}};
}

json to_json(const KpssResult& result) {
    return {{"statistic", result.statistic},
            {"bandwidth", result.bandwidth},
            {"reject_10pct", result.reject.at(KpssLevel::ten_percent)},
            {"reject_5pct", result.reject.at(KpssLevel::five_percent)},
            {"reject_1pct", result.reject.at(KpssLevel::one_percent)}};
}

json to_json(const FitResult& fit) {
    json j = to_json(fit.spec, fit.params);
    j["log_likelihood"] = fit.log_likelihood;
    j["n_obs"] = fit.n_obs;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["se_warning"] = fit.se_warning;
    j["residuals"] = to_json(fit.residuals);
    j["standardized_residuals"] = to_json(fit.standardized_residuals);
    j["diagnostics"] = to_json(fit.diagnostics);
    if (fit.spec.series == SeriesKind::long_rate) {
        j["derived"] = {{"mu_c_level", std::exp(fit.params.get("ln_mu_c"))}};
    }
    json trace = json::object();
    for (const auto& [name, s] : fit.filter.trace) trace[name] = to_json(s);
    j["latent"] = trace;
    return j;
}

json to_json(const StabilityTable& table) {
    json rows = json::array();
    for (const auto& row : table.rows) {
        json params = json::array();
        for (const auto& p : row.params.parameters()) {
            json entry = {{"name", p.name}, {"value", p.value}, {"fixed", p.fixed}};
            entry["std_error"] = p.std_error ? json(*p.std_error) : json(nullptr);
            if (row.ci_low.count(p.name)) {
                entry["ci_low"] = row.ci_low.at(p.name);
                entry["ci_high"] = row.ci_high.at(p.name);
            }
            params.push_back(entry);
        }
        json r = {{"period_bound_year", row.bound_year}, {"converged", row.converged}, {"parameters", params}};
        if (row.converged) r["log_likelihood"] = row.log_likelihood;
        if (!row.error.empty()) r["error"] = row.error;
        rows.push_back(r);
    }
    return {{"series", to_string(table.spec.series)},
            {"variant", to_string(table.spec.variant)},
            {"direction", to_string(table.direction)},
            {"min_obs", table.min_obs},
            {"mode", table.parallel ? "independent_starts" : "warm_start"},
            {"rows", rows}};
}

json to_json(const BacktestReport& report) {
    json cells = json::object();
    for (const auto& [name, list] : report.cells) {
        json arr = json::array();
        for (const auto& c : list) {
            arr.push_back({{"year", c.year},
                           {"observed", c.observed},
                           {"lo95", c.lo95},
                           {"hi95", c.hi95},
                           {"lo99", c.lo99},
                           {"hi99", c.hi99},
                           {"inside_95", c.inside_95},
                           {"inside_99", c.inside_99}});
        }
        cells[name] = arr;
    }
    json fits = json::object();
    for (const auto& [kind, f] : report.fits) {
        json p = to_json(f.spec, f.params);
        p["log_likelihood"] = f.log_likelihood;
        p["fitted_years"] = {f.residuals.start_year(), f.residuals.end_year()};
        fits[to_string(kind)] = p;
    }
    return {{"split_year", report.split_year},
            {"coverage_95", report.coverage_95},
            {"coverage_99", report.coverage_99},
            {"cells", cells},
            {"parameters", fits}};
}

json diagnose_json(const std::string& series, const DiagnosticsReport& report, const KpssResult& kpss) {
    json j = {{"series", series}, {"n", report.n}};
    for (const auto& [k, v] : report.r_z) j["r_z_" + std::to_string(k)] = number_or_null(v);
    for (const auto& [k, v] : report.r_z2) j["r_z2_" + std::to_string(k)] = number_or_null(v);
    for (const auto& [k, v] : report.r_z_flag) j["r_z_" + std::to_string(k) + "_flag"] = v;
    for (const auto& [k, v] : report.r_z2_flag) j["r_z2_" + std::to_string(k) + "_flag"] = v;
    j["skewness"] = number_or_null(report.skewness);
    j["kurtosis"] = number_or_null(report.kurtosis);
    j["jarque_bera"] = number_or_null(report.jarque_bera);
    j["jb_p_value"] = number_or_null(report.jb_p_value);
    j["kpss_statistic"] = kpss.statistic;
    j["kpss_bandwidth"] = kpss.bandwidth;
    j["kpss_reject_10pct"] = kpss.reject.at(KpssLevel::ten_percent);
    j["kpss_reject_5pct"] = kpss.reject.at(KpssLevel::five_percent);
    j["kpss_reject_1pct"] = kpss.reject.at(KpssLevel::one_percent);
    j["kpss_level_stationary_at_1pct"] = !kpss.reject.at(KpssLevel::one_percent);
    return j;
}

void write_stability_csv(std::ostream& out, const StabilityTable& table) {
    const auto layout = parameter_layout(table.spec.series, table.spec.variant);
    out << "period_bound_year";
    for (const auto& info : layout) {
        out << ',' << info.name << "_estimate," << info.name << "_se," << info.name << "_ci_low," << info.name
            << "_ci_high";
    }
    out << '\n';
    for (const auto& row : table.rows) {
        out << row.bound_year;
        for (const auto& info : layout) {
            if (!row.params.has(info.name)) {
                out << ",,,,";
                continue;
            }
            const Parameter& p = row.params.at(info.name);
            out << ',' << format_double(p.value) << ',';
            if (p.std_error) out << format_double(*p.std_error);
            out << ',';
            if (row.ci_low.count(info.name)) out << format_double(row.ci_low.at(info.name));
            out << ',';
            if (row.ci_high.count(info.name)) out << format_double(row.ci_high.at(info.name));
        }
        out << '\n';
    }
}

void write_fan_csv(std::ostream& out, const FanTable& fan) {
    out << "year,series,q005,q025,q50,q975,q995,mean\n";
    for (const auto& [name, rows] : fan.series) {
        for (const auto& r : rows) {
            out << r.year << ',' << name << ',' << format_double(r.lower(0.99)) << ','
                << format_double(r.lower(0.95)) << ',' << format_double(r.quantiles.at(0.5)) << ','
                << format_double(r.upper(0.95)) << ',' << format_double(r.upper(0.99)) << ','
                << format_double(r.mean) << '\n';
        }
    }
}

void write_scenarios_csv(std::ostream& out, const ScenarioSet& scenarios) {
    out << "path,year,series,value\n";
    for (long p = 0; p < scenarios.n_paths; ++p) {
        for (int k = 0; k < scenarios.horizon; ++k) {
            for (const auto& name : kScenarioSeries) {
                const auto it = scenarios.series.find(name);
                if (it == scenarios.series.end()) continue;
                out << p << ',' << scenarios.start_year + k << ',' << name << ','
                    << format_double(it->second(p, k)) << '\n';
            }
        }
    }
}

void write_scenarios_binary(std::ostream& out, const ScenarioSet& scenarios) {
    std::uint64_t mask = 0;
    std::uint64_t count = 0;
    for (std::size_t i = 0; i < kScenarioSeries.size(); ++i) {
        if (scenarios.series.count(kScenarioSeries[i])) {
            mask |= std::uint64_t{1} << i;
            ++count;
        }
    }
    out.write("SAESG1", 6);
    put_u64(out, count);
    put_u64(out, static_cast<std::uint64_t>(scenarios.n_paths));
    put_u64(out, static_cast<std::uint64_t>(scenarios.horizon));
    put_u64(out, mask);
    put_u64(out, scenarios.seed);
    for (const auto& name : kScenarioSeries) {
        const auto it = scenarios.series.find(name);
        if (it == scenarios.series.end()) continue;
        const PathMatrix& m = it->second;
        for (Eigen::Index i = 0; i < m.size(); ++i) put_f64(out, m.data()[i]);
    }
}

ScenarioBinary read_scenarios_binary(std::istream& in) {
    char magic[6];
    if (!in.read(magic, 6) || std::memcmp(magic, "SAESG1", 6) != 0) {
        throw std::runtime_error("not a scenario file (bad magic)");
    }
    ScenarioBinary out;
    const std::uint64_t count = get_u64(in);
    out.n_paths = static_cast<long>(get_u64(in));
    out.horizon = static_cast<int>(get_u64(in));
    const std::uint64_t mask = get_u64(in);
    out.seed = get_u64(in);
    std::uint64_t seen = 0;
    for (std::size_t i = 0; i < kScenarioSeries.size(); ++i) {
        if (!(mask & (std::uint64_t{1} << i))) continue;
        PathMatrix m(out.n_paths, out.horizon);
        for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = get_f64(in);
        out.series.emplace(kScenarioSeries[i], std::move(m));
        ++seen;
    }
    if (seen != count) throw std::runtime_error("scenario file series count does not match its mask");
    return out;
}

void write_backtest_csv(std::ostream& out, const BacktestReport& report) {
    out << "year,series,observed,lo95,hi95,lo99,hi99,inside_95,inside_99\n";
    for (const auto& [name, cells] : report.cells) {
        for (const auto& c : cells) {
            out << c.year << ',' << name << ',' << format_double(c.observed) << ',' << format_double(c.lo95) << ','
                << format_double(c.hi95) << ',' << format_double(c.lo99) << ',' << format_double(c.hi99) << ','
                << (c.inside_95 ? 1 : 0) << ',' << (c.inside_99 ? 1 : 0) << '\n';
        }
    }
}

std::string format_fit_table(const std::vector<FitResult>& fits) {
    std::ostringstream out;
    out << std::fixed;
    for (const auto& f : fits) {
        out << to_string(f.spec.series) << " / " << to_string(f.spec.variant) << "  (" << f.residuals.start_year()
            << "-" << f.residuals.end_year() << ", n=" << f.n_obs << ")\n";
        for (const auto& p : f.params.parameters()) {
            out << "  " << std::left << std::setw(10) << p.name << std::right << std::setw(12)
                << std::setprecision(4) << p.value << "  ";
            if (p.fixed) {
                out << "(fixed parameter)";
            } else if (p.std_error) {
                out << "(" << std::setprecision(4) << *p.std_error << ")";
            } else {
                out << "(n/a)";
            }
            out << '\n';
        }
        if (f.spec.series == SeriesKind::long_rate) {
            out << "  " << std::left << std::setw(10) << "mu_c" << std::right << std::setw(12)
                << std::setprecision(4) << std::exp(f.params.get("ln_mu_c")) << "  (level, derived)\n";
        }
        const auto& d = f.diagnostics;
        out << "  " << std::left << std::setw(16) << "Log Likelihood" << std::right << std::setprecision(2)
            << f.log_likelihood << '\n';
        if (d.r_z.count(1)) out << "  " << std::left << std::setw(16) << "r_z(1)" << std::setprecision(3) << d.r_z.at(1) << '\n';
        if (d.r_z2.count(1)) out << "  " << std::left << std::setw(16) << "r_z2(1)" << std::setprecision(3) << d.r_z2.at(1) << '\n';
        out << "  " << std::left << std::setw(16) << "skewness" << std::setprecision(4) << d.skewness << '\n';
        out << "  " << std::left << std::setw(16) << "kurtosis" << std::setprecision(4) << d.kurtosis << '\n';
        out << "  " << std::left << std::setw(16) << "Jarque-Bera" << std::setprecision(4) << d.jarque_bera << '\n';
        out << "  " << std::left << std::setw(16) << "p(chi2)" << std::setprecision(4) << d.jb_p_value << '\n';
        if (f.se_warning) out << "  warning: singular information matrix, standard errors unavailable\n";
        if (!f.converged) out << "  warning: optimizer hit the iteration limit\n";
        out << '\n';
    }
    return out.str();
}

}  // namespace saesg
