#include "saesg/commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include "saesg/report_io.hpp"

namespace saesg {

namespace {

struct Run {
    RunConfig config;
    CommandArgs args;
    std::filesystem::path out;
    std::vector<std::string> outputs;
    json extra = json::object();

    Run(const RunConfig& c, const CommandArgs& a) : config(c), args(a) {
        if (args.seed) {
            config.seed = *args.seed;
            config.fit.seed = *args.seed;
        }
        out = args.out ? *args.out : config.output_dir;
        std::error_code ec;
        std::filesystem::create_directories(out, ec);
        if (ec) throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());
    }

    void write(const std::string& name, const std::string& content) {
        std::ofstream f(out / name, std::ios::binary);
        if (!f) throw ConfigError("cannot write " + (out / name).string());
        f << content;
        outputs.push_back(name);
    }

    template <typename Writer>
    void write_with(const std::string& name, Writer&& writer) {
        std::ostringstream s;
        writer(s);
        write(name, s.str());
    }

    void manifest() {
        json files = json::array();
        for (const auto& name : outputs) {
            std::ifstream f(out / name, std::ios::binary);
            std::stringstream buf;
            buf << f.rdbuf();
            files.push_back({{"file", name}, {"fnv1a64", fnv1a_hex(buf.str())}});
        }
        json arguments = json::object();
        if (args.series) arguments["series"] = *args.series;
        if (args.direction) arguments["direction"] = *args.direction;
        if (args.min_obs) arguments["min_obs"] = *args.min_obs;
        if (args.parallel) arguments["parallel"] = *args.parallel;
        if (args.split_year) arguments["split_year"] = *args.split_year;

        // Verbatim text, so a replay hashes to the same value.
        const json cfg = config.raw_text.empty() ? json(nullptr) : json(config.raw_text);

        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);

        json m = {{"command", args.command},
                  {"version", kVersion},
                  {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                  {"config_path", config.source.string()},
                  {"config_dir", config.source.empty() ? "" : config.source.parent_path().string()},
                  {"config_hash", fnv1a_hex(config.raw_text)},
                  {"config", cfg},
                  {"seed", config.seed},
                  {"arguments", arguments},
                  {"outputs", files},
                  {"created_utc", stamp}};
        for (const auto& [k, v] : extra.items()) m[k] = v;
        std::ofstream f(out / (args.command + "_manifest.json"), std::ios::binary);
        f << m.dump(2) << '\n';
    }
};

SeriesKind series_arg(const Run& run, const std::string& fallback) {
    const std::string name = run.args.series.value_or(fallback);
    if (name.empty()) throw ConfigError(run.args.command + ": --series is required");
    try {
        return series_from_string(name);
    } catch (const ModelError& e) {
        throw ConfigError(run.args.command + ": " + e.what());
    }
}

const ModelSpec& model_for(const RunConfig& config, SeriesKind kind) {
    const auto it = config.models.find(kind);
    if (it == config.models.end()) throw ConfigError("models." + to_string(kind) + " is not configured");
    return it->second;
}

void require(bool present, SeriesKind kind, const char* what) {
    if (!present) throw ConfigError("model " + to_string(kind) + " needs the " + what + " series in data");
}

void check_data(const std::map<SeriesKind, ModelSpec>& specs, const DataBundle& b) {
    for (const auto& [kind, spec] : specs) {
        switch (kind) {
            case SeriesKind::inflation:
                require(b.inflation.has_value(), kind, "cpi or inflation");
                break;
            case SeriesKind::dividend_yield:
                require(b.dividend_yield.has_value(), kind, "dividend_yield");
                if (spec.variant == Variant::ma_inflation) require(b.inflation.has_value(), kind, "cpi or inflation");
                break;
            case SeriesKind::dividend:
                require(b.dividend_growth.has_value(), kind, "dividend_yield and share_price");
                if (spec.variant != Variant::yield_only) require(b.inflation.has_value(), kind, "cpi or inflation");
                if (!specs.count(SeriesKind::dividend_yield)) {
                    throw ConfigError(
                        "model dividend depends on dividend_yield in the cascade (it consumes the yield residuals); "
                        "configure models.dividend_yield");
                }
                break;
            case SeriesKind::long_rate:
                require(b.long_rate.has_value(), kind, "long_rate");
                if (spec.variant == Variant::ma_inflation) require(b.inflation.has_value(), kind, "cpi or inflation");
                break;
            case SeriesKind::short_rate:
                require(b.long_rate.has_value(), kind, "long_rate");
                require(b.short_rate.has_value(), kind, "money_market or short_rate");
                break;
            case SeriesKind::ilb:
                require(b.ilb_rate.has_value(), kind, "ilb");
                if (spec.variant == Variant::both_rates || spec.variant == Variant::long_only) {
                    require(b.long_rate.has_value(), kind, "long_rate");
                }
                if (spec.variant == Variant::both_rates || spec.variant == Variant::short_with_mean ||
                    spec.variant == Variant::short_no_mean) {
                    require(b.short_rate.has_value(), kind, "money_market or short_rate");
                }
                break;
        }
    }
}

const std::optional<AnnualSeries>& observed_series(const DataBundle& b, SeriesKind kind) {
    switch (kind) {
        case SeriesKind::inflation: return b.inflation;
        case SeriesKind::dividend_yield: return b.dividend_yield;
        case SeriesKind::dividend: return b.dividend_growth;
        case SeriesKind::long_rate: return b.long_rate;
        case SeriesKind::short_rate: return b.short_rate;
        case SeriesKind::ilb: return b.ilb_rate;
    }
    return b.inflation;
}

/// Adds eps_y to the bundle when the target model is the dividend model.
DataBundle with_upstream(const RunConfig& config, SeriesKind kind, DataBundle data) {
    if (kind == SeriesKind::dividend) {
        const FitResult y = fit(model_for(config, SeriesKind::dividend_yield), data, config.fit);
        data.yield_residuals = y.residuals;
    }
    return data;
}

void apply_overrides(CascadeParams& models, const RunConfig& config) {
    for (const auto& [kind, values] : config.overrides) {
        const auto it = models.find(kind);
        if (it == models.end()) continue;
        for (const auto& [name, value] : values) it->second.params.set(name, value);
        check_admissible(it->second.spec, it->second.params);
    }
}

int fit_impl(Run& run, std::ostream& log, std::ostream& err) {
    if (run.config.models.empty()) throw ConfigError("fit: no models configured");
    const DataBundle data = build_bundle(run.config);
    check_data(run.config.models, data);

    std::map<SeriesKind, std::string> failures;
    const auto fits = fit_cascade(run.config.models, data, run.config.fit, &failures);

    std::vector<FitResult> ordered;
    for (const auto& [kind, f] : fits) {
        run.write("fit_" + to_string(kind) + ".json", to_json(f).dump(2) + "\n");
        ordered.push_back(f);
        if (f.se_warning) err << "fit: " << to_string(kind) << ": Hessian not positive definite, SEs omitted\n";
    }
    if (!ordered.empty()) {
        const std::string table = format_fit_table(ordered);
        run.write("fit_table.txt", table);
        log << table;
    }
    json fail = json::object();
    for (const auto& [kind, msg] : failures) {
        err << "fit: " << to_string(kind) << ": " << msg << '\n';
        fail[to_string(kind)] = msg;
    }
    run.extra["failures"] = fail;
    run.manifest();
    if (failures.empty()) return exit_ok;
    return fits.empty() ? exit_numerical : exit_partial;
}

int diagnose_impl(Run& run, std::ostream& log) {
    const SeriesKind kind = series_arg(run, "");
    const DataBundle data = build_bundle(run.config);
    const auto& observed = observed_series(data, kind);
    if (!observed) throw ConfigError("diagnose: no data for series " + to_string(kind));

    const KpssResult kpss = kpss_level(observed->values());
    DiagnosticsReport report;
    std::string subject = "series";
    if (run.config.models.count(kind)) {
        std::map<SeriesKind, ModelSpec> one = {{kind, model_for(run.config, kind)}};
        if (kind == SeriesKind::dividend) one[SeriesKind::dividend_yield] = model_for(run.config, SeriesKind::dividend_yield);
        check_data(one, data);
        const FitResult f = fit(model_for(run.config, kind), with_upstream(run.config, kind, data), run.config.fit);
        report = diagnose_residuals(f.standardized_residuals.values(), run.config.diagnose_max_lag);
        subject = "standardized_residuals";
    } else {
        report = diagnose_residuals(observed->values(), run.config.diagnose_max_lag);
    }
    json j = diagnose_json(to_string(kind), report, kpss);
    j["diagnostics_of"] = subject;
    j["kpss_of"] = "series";
    const std::string name = "diagnose_" + to_string(kind) + ".json";
    run.write(name, j.dump(2) + "\n");
    log << j.dump(2) << '\n';
    run.manifest();
    return exit_ok;
}

int stability_impl(Run& run, std::ostream& log) {
    const SeriesKind kind = series_arg(run, run.config.stability.series);
    StabilityDirection direction = run.config.stability.direction;
    if (run.args.direction) {
        try {
            direction = direction_from_string(*run.args.direction);
        } catch (const EstimationError& e) {
            throw ConfigError(std::string("stability: ") + e.what());
        }
    }
    const int min_obs = run.args.min_obs.value_or(run.config.stability.min_obs);
    const bool parallel = run.args.parallel.value_or(run.config.stability.parallel);
    const ModelSpec& spec = model_for(run.config, kind);

    const DataBundle raw = build_bundle(run.config);
    std::map<SeriesKind, ModelSpec> one = {{kind, spec}};
    if (kind == SeriesKind::dividend) one[SeriesKind::dividend_yield] = model_for(run.config, SeriesKind::dividend_yield);
    check_data(one, raw);
    const DataBundle data = with_upstream(run.config, kind, raw);
    const long available = modelled_series(spec, data).size();
    if (min_obs < 2 || min_obs > available) {
        throw ConfigError("stability: min_obs " + std::to_string(min_obs) + " outside [2, " +
                          std::to_string(available) + "] for " + to_string(kind));
    }

    const StabilityTable table =
        recursive_fit(spec, data, direction, min_obs, run.config.fit, parallel, run.config.simulation.threads);
    const std::string stem = "stability_" + to_string(kind) + "_" + to_string(direction);
    run.write_with(stem + ".csv", [&](std::ostream& s) { write_stability_csv(s, table); });
    run.write(stem + ".json", to_json(table).dump(2) + "\n");
    int failed = 0;
    for (const auto& row : table.rows) failed += row.converged ? 0 : 1;
    log << "stability: " << table.rows.size() << " rows, " << failed << " failed\n";
    run.manifest();
    if (failed == 0) return exit_ok;
    return failed == static_cast<int>(table.rows.size()) ? exit_numerical : exit_partial;
}

int simulate_impl(Run& run, std::ostream& log) {
    const auto& sim = run.config.simulation;
    CascadeParams models;
    CascadeState initial;
    int start_year = 1;

    if (!run.config.param_files.empty()) {
        if (sim.initial_state == InitialStateMode::from_fit) {
            throw ConfigError("simulation.initial_state 'from_fit' needs data and models, not parameter files; use 'neutral'");
        }
        for (const auto& [kind, path] : run.config.param_files) {
            std::ifstream f(path);
            try {
                models[kind] = submodel_from_json(json::parse(f));
            } catch (const json::exception& e) {
                throw ConfigError("params." + to_string(kind) + ": " + e.what());
            }
            if (models[kind].spec.series != kind) throw ConfigError("params." + to_string(kind) + ": file is for another series");
        }
        if (!sim.include_ilb) models.erase(SeriesKind::ilb);
        apply_overrides(models, run.config);
        check_dependencies(models);
        initial = neutral_state(models);
    } else {
        auto specs = run.config.models;
        if (specs.empty()) throw ConfigError("simulate: configure models with data, or params files");
        if (!sim.include_ilb) specs.erase(SeriesKind::ilb);
        const DataBundle data = build_bundle(run.config);
        check_data(specs, data);
        const auto fits = fit_cascade(specs, data, run.config.fit);
        for (const auto& [kind, f] : fits) models[kind] = SubModel{f.spec, f.params};
        apply_overrides(models, run.config);
        check_dependencies(models);
        if (sim.initial_state == InitialStateMode::from_fit) {
            initial = initial_state_from_fits(fits);
            start_year = fits.begin()->second.residuals.end_year() + 1;
        } else {
            initial = neutral_state(models);
        }
    }

    SimulationOptions opt;
    opt.horizon = sim.horizon;
    opt.n_paths = sim.n_paths;
    opt.seed = run.config.seed;
    opt.base_cpi = sim.base_cpi;
    opt.base_price = sim.base_price;
    opt.start_year = start_year;
    opt.threads = sim.threads;
    const ScenarioSet scenarios = simulate(models, initial, opt);
    const FanTable table = fan(scenarios, {0.95, 0.99});

    json params = json::object();
    for (const auto& [kind, m] : models) params[to_string(kind)] = to_json(m.spec, m.params);
    run.write("simulation_parameters.json", params.dump(2) + "\n");
    run.write_with("fan.csv", [&](std::ostream& s) { write_fan_csv(s, table); });
    if (sim.scenario_output == "binary" || sim.scenario_output == "both") {
        run.write_with("scenarios.bin", [&](std::ostream& s) { write_scenarios_binary(s, scenarios); });
    }
    if (sim.scenario_output == "csv" || sim.scenario_output == "both") {
        run.write_with("scenarios.csv", [&](std::ostream& s) { write_scenarios_csv(s, scenarios); });
    }
    log << "simulate: " << scenarios.n_paths << " paths x " << scenarios.horizon << " years, "
        << scenarios.series.size() << " series\n";
    run.manifest();
    return exit_ok;
}

int backtest_impl(Run& run, std::ostream& log) {
    const auto split = run.args.split_year ? run.args.split_year : run.config.backtest.split_year;
    if (!split) throw ConfigError("backtest: --split-year (or backtest.split_year) is required");
    if (run.config.models.empty()) throw ConfigError("backtest: no models configured");

    BacktestOptions opt;
    opt.specs = run.config.models;
    opt.split_year = *split;
    opt.horizon = run.config.backtest.horizon;
    opt.n_paths = run.config.backtest.n_paths;
    opt.seed = run.config.seed;
    opt.include_ilb = run.config.backtest.include_ilb;
    if (run.config.backtest.apply_overrides) opt.overrides = run.config.overrides;
    opt.fit_options = run.config.fit;
    opt.threads = run.config.simulation.threads;

    const DataBundle data = build_bundle(run.config);
    auto specs = opt.specs;
    if (!opt.include_ilb) specs.erase(SeriesKind::ilb);
    check_data(specs, data);
    const BacktestReport report = backtest(data, opt);

    run.write("backtest.json", to_json(report).dump(2) + "\n");
    run.write_with("backtest.csv", [&](std::ostream& s) { write_backtest_csv(s, report); });
    run.write_with("backtest_fan.csv", [&](std::ostream& s) { write_fan_csv(s, report.fan); });
    for (const auto& [name, c] : report.coverage_95) {
        log << "backtest: " << name << " coverage 95% " << c << ", 99% " << report.coverage_99.at(name) << '\n';
    }
    run.manifest();
    return exit_ok;
}

template <typename Body>
int guarded(const std::string& command, std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << command << ": " << e.what() << '\n';
        return exit_validation;
    } catch (const DataError& e) {
        err << command << ": data: " << e.what() << '\n';
        return exit_validation;
    } catch (const ModelError& e) {
        err << command << ": model: " << e.what() << '\n';
        return exit_validation;
    } catch (const std::exception& e) {
        err << command << ": " << e.what() << '\n';
        return exit_numerical;
    }
}

}  // namespace

int cmd_fit(const RunConfig& config, const CommandArgs& args, std::ostream& log, std::ostream& err) {
    return guarded("fit", err, [&] {
        Run run(config, args);
        return fit_impl(run, log, err);
    });
}

int cmd_diagnose(const RunConfig& config, const CommandArgs& args, std::ostream& log, std::ostream& err) {
    return guarded("diagnose", err, [&] {
        Run run(config, args);
        return diagnose_impl(run, log);
    });
}

int cmd_stability(const RunConfig& config, const CommandArgs& args, std::ostream& log, std::ostream& err) {
    return guarded("stability", err, [&] {
        Run run(config, args);
        return stability_impl(run, log);
    });
}

int cmd_simulate(const RunConfig& config, const CommandArgs& args, std::ostream& log, std::ostream& err) {
    return guarded("simulate", err, [&] {
        Run run(config, args);
        return simulate_impl(run, log);
    });
}

int cmd_backtest(const RunConfig& config, const CommandArgs& args, std::ostream& log, std::ostream& err) {
    return guarded("backtest", err, [&] {
        Run run(config, args);
        return backtest_impl(run, log);
    });
}

namespace {

int dispatch(const RunConfig& config, const CommandArgs& args, std::ostream& log, std::ostream& err) {
    if (args.command == "fit") return cmd_fit(config, args, log, err);
    if (args.command == "diagnose") return cmd_diagnose(config, args, log, err);
    if (args.command == "stability") return cmd_stability(config, args, log, err);
    if (args.command == "simulate") return cmd_simulate(config, args, log, err);
    if (args.command == "backtest") return cmd_backtest(config, args, log, err);
    err << "unknown command '" << args.command << "'\n";
    return exit_validation;
}

}  // namespace

int run_command(const std::optional<std::filesystem::path>& config_path, const CommandArgs& args, std::ostream& log,
                std::ostream& err) {
    RunConfig config;
    const int rc = guarded(args.command, err, [&] {
        if (config_path) config = load_config(*config_path);
        return int(exit_ok);
    });
    if (rc != exit_ok) return rc;
    return dispatch(config, args, log, err);
}

int replay_manifest(const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& out,
                    std::ostream& log, std::ostream& err) {
    RunConfig config;
    CommandArgs args;
    const int rc = guarded("replay", err, [&] {
        std::ifstream f(manifest);
        if (!f) throw ConfigError("cannot open manifest " + manifest.string());
        json m;
        try {
            m = json::parse(f);
        } catch (const json::exception& e) {
            throw ConfigError(manifest.string() + ": " + e.what());
        }
        const std::filesystem::path dir = m.value("config_dir", "");
        if (!m.contains("config") || m.at("config").is_null()) throw ConfigError("manifest has no embedded config");
        const std::string text = m.at("config").get<std::string>();
        try {
            config = parse_config(json::parse(text), dir);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("embedded config: ") + e.what());
        }
        config.raw_text = text;
        config.source = m.value("config_path", "");
        args.command = m.at("command").get<std::string>();
        args.seed = m.at("seed").get<std::uint64_t>();
        const json& a = m.at("arguments");
        if (a.contains("series")) args.series = a.at("series").get<std::string>();
        if (a.contains("direction")) args.direction = a.at("direction").get<std::string>();
        if (a.contains("min_obs")) args.min_obs = a.at("min_obs").get<int>();
        if (a.contains("parallel")) args.parallel = a.at("parallel").get<bool>();
        if (a.contains("split_year")) args.split_year = a.at("split_year").get<int>();
        args.out = out ? *out : config.output_dir;
        return int(exit_ok);
    });
    if (rc != exit_ok) return rc;
    return dispatch(config, args, log, err);
}

}  // namespace saesg
