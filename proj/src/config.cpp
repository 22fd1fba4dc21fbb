#include "saesg/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace saesg {

namespace {

using nlohmann::json;

const std::map<std::string, Unit> kDefaultUnits = {
    {"cpi", Unit::index_level},         {"inflation", Unit::rate_decimal},
    {"dividend_yield", Unit::rate_percent}, {"share_price", Unit::index_level},
    {"long_rate", Unit::rate_percent},  {"money_market", Unit::index_level},
    {"short_rate", Unit::rate_decimal}, {"ilb", Unit::rate_percent},
};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig cfg;
    cfg.output_dir = resolve(base_dir, get_or<std::string>(doc, "output_dir", "out"));
    cfg.seed = get_or<std::uint64_t>(doc, "seed", 1);
    cfg.fit.seed = cfg.seed;

    if (doc.contains("data")) {
        for (const auto& [name, entry] : doc.at("data").items()) {
            if (!kDefaultUnits.count(name)) throw ConfigError("data." + name + ": unknown data source");
            DataSource src;
            if (!entry.contains("path")) throw ConfigError("data." + name + ": missing 'path'");
            src.path = resolve(base_dir, entry.at("path").get<std::string>());
            if (!std::filesystem::exists(src.path)) {
                throw ConfigError("data." + name + ".path: file not found: " + src.path.string());
            }
            try {
                src.unit = entry.contains("unit") ? unit_from_string(entry.at("unit").get<std::string>())
                                                  : kDefaultUnits.at(name);
            } catch (const DataError& e) {
                throw ConfigError("data." + name + ".unit: " + e.what());
            }
            src.columns.year = get_or<std::string>(entry, "year_column", "year");
            src.columns.value = get_or<std::string>(entry, "value_column", "value");
            src.columns.series = get_or<std::string>(entry, "series_column", "series");
            cfg.data[name] = src;
        }
    }

    if (doc.contains("models")) {
        for (const auto& [name, entry] : doc.at("models").items()) {
            try {
                const SeriesKind kind = series_from_string(name);
                const std::string variant = get_or<std::string>(entry, "variant", "");
                if (variant.empty()) throw ConfigError("models." + name + ": missing 'variant'");
                ModelSpec spec = ModelSpec::make(kind, variant_from_string(variant));
                if (entry.contains("fixed")) {
                    spec.fixed.clear();
                    for (const auto& [k, v] : entry.at("fixed").items()) spec.fixed[k] = v.get<double>();
                }
                if (entry.contains("ma_init") && !entry.at("ma_init").is_null()) {
                    spec.ma_init = entry.at("ma_init").get<double>();
                }
                if (entry.contains("yield_unit")) {
                    spec.yield_unit = unit_from_string(entry.at("yield_unit").get<std::string>());
                }
                spec.validate();
                cfg.models[kind] = spec;
            } catch (const ModelError& e) {
                throw ConfigError("models." + name + ": " + e.what());
            } catch (const DataError& e) {
                throw ConfigError("models." + name + ": " + e.what());
            }
        }
    }

    if (doc.contains("overrides")) {
        for (const auto& [name, entry] : doc.at("overrides").items()) {
            SeriesKind kind;
            try {
                kind = series_from_string(name);
            } catch (const ModelError& e) {
                throw ConfigError(std::string("overrides: ") + e.what());
            }
            const auto it = cfg.models.find(kind);
            const auto layout = it != cfg.models.end() ? parameter_layout(kind, it->second.variant)
                                                       : std::vector<ParamInfo>{};
            for (const auto& [param, value] : entry.items()) {
                const bool known = std::any_of(layout.begin(), layout.end(),
                                               [&](const ParamInfo& p) { return p.name == param; });
                if (!known) throw ConfigError("overrides." + name + "." + param + ": not a parameter of the model");
                cfg.overrides[kind][param] = value.get<double>();
            }
        }
    }

    if (doc.contains("params")) {
        for (const auto& [name, entry] : doc.at("params").items()) {
            try {
                const auto path = resolve(base_dir, entry.get<std::string>());
                if (!std::filesystem::exists(path)) throw ConfigError("params." + name + ": file not found: " + path.string());
                cfg.param_files[series_from_string(name)] = path;
            } catch (const ModelError& e) {
                throw ConfigError(std::string("params: ") + e.what());
            }
        }
    }

    if (doc.contains("optimizer")) {
        const auto& o = doc.at("optimizer");
        auto& opt = cfg.fit.optimizer;
        opt.reflection = get_or(o, "reflection", opt.reflection);
        opt.expansion = get_or(o, "expansion", opt.expansion);
        opt.contraction = get_or(o, "contraction", opt.contraction);
        opt.shrink = get_or(o, "shrink", opt.shrink);
        opt.f_tol = get_or(o, "f_tol", opt.f_tol);
        opt.x_tol = get_or(o, "x_tol", opt.x_tol);
        opt.max_iter = get_or(o, "max_iter", opt.max_iter);
        opt.restarts = get_or(o, "restarts", opt.restarts);
        cfg.fit.n_starts = get_or(o, "n_starts", cfg.fit.n_starts);
        try {
            opt.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("optimizer: ") + e.what());
        }
        if (cfg.fit.n_starts < 1) throw ConfigError("optimizer.n_starts must be at least 1");
    }

    if (doc.contains("simulation")) {
        const auto& s = doc.at("simulation");
        auto& sim = cfg.simulation;
        sim.n_paths = get_or(s, "n_paths", sim.n_paths);
        sim.horizon = get_or(s, "horizon", sim.horizon);
        sim.threads = get_or(s, "threads", sim.threads);
        sim.base_cpi = get_or(s, "base_cpi", sim.base_cpi);
        sim.base_price = get_or(s, "base_price", sim.base_price);
        sim.include_ilb = get_or(s, "include_ilb", sim.include_ilb);
        sim.scenario_output = get_or<std::string>(s, "scenario_output", sim.scenario_output);
        const auto mode = get_or<std::string>(s, "initial_state", "from_fit");
        if (mode == "from_fit") {
            sim.initial_state = InitialStateMode::from_fit;
        } else if (mode == "neutral") {
            sim.initial_state = InitialStateMode::neutral;
        } else {
            throw ConfigError("simulation.initial_state must be 'from_fit' or 'neutral'");
        }
        if (sim.n_paths < 1 || sim.horizon < 1) throw ConfigError("simulation.n_paths and horizon must be positive");
        if (sim.scenario_output != "binary" && sim.scenario_output != "csv" && sim.scenario_output != "both" &&
            sim.scenario_output != "none") {
            throw ConfigError("simulation.scenario_output must be binary, csv, both or none");
        }
    }

    if (doc.contains("stability")) {
        const auto& s = doc.at("stability");
        cfg.stability.series = get_or<std::string>(s, "series", cfg.stability.series);
        try {
            cfg.stability.direction = direction_from_string(get_or<std::string>(s, "direction", "expanding_end"));
        } catch (const EstimationError& e) {
            throw ConfigError(std::string("stability.direction: ") + e.what());
        }
        cfg.stability.min_obs = get_or(s, "min_obs", cfg.stability.min_obs);
        cfg.stability.parallel = get_or(s, "parallel", cfg.stability.parallel);
    }

    if (doc.contains("backtest")) {
        const auto& b = doc.at("backtest");
        if (b.contains("split_year")) cfg.backtest.split_year = b.at("split_year").get<int>();
        cfg.backtest.n_paths = get_or(b, "n_paths", cfg.backtest.n_paths);
        cfg.backtest.horizon = get_or(b, "horizon", cfg.backtest.horizon);
        cfg.backtest.include_ilb = get_or(b, "include_ilb", cfg.backtest.include_ilb);
        cfg.backtest.apply_overrides = get_or(b, "apply_overrides", cfg.backtest.apply_overrides);
    }

    if (doc.contains("diagnose")) cfg.diagnose_max_lag = get_or(doc.at("diagnose"), "max_lag", 10);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    RunConfig cfg = parse_config(doc, path.parent_path());
    cfg.source = path;
    cfg.raw_text = buf.str();
    return cfg;
}

DataBundle build_bundle(const RunConfig& config) {
    DataBundle b;
    auto load = [&](const char* name) -> std::optional<AnnualSeries> {
        const auto it = config.data.find(name);
        if (it == config.data.end()) return std::nullopt;
        return load_series(it->second.path, it->second.unit, it->second.columns);
    };

    b.cpi = load("cpi");
    if (b.cpi) {
        b.inflation = force_of_inflation(*b.cpi);
    } else {
        b.inflation = load("inflation");
    }

    b.dividend_yield = load("dividend_yield");
    b.share_price = load("share_price");
    if (b.dividend_yield && b.share_price) {
        const auto [lo, hi] = common_years({&*b.share_price, &*b.dividend_yield});
        b.dividends = derive_dividends(b.share_price->slice(lo, hi), b.dividend_yield->slice(lo, hi));
        b.dividend_growth = log_growth(*b.dividends);
    }

    b.long_rate = load("long_rate");
    if (const auto mm = load("money_market")) {
        b.short_rate = short_rate_from_index(*mm);
    } else {
        b.short_rate = load("short_rate");
    }

    if (const auto it = config.data.find("ilb"); it != config.data.end()) {
        const auto all = load_multi_series(it->second.path, it->second.unit, it->second.columns);
        std::vector<AnnualSeries> list;
        for (const auto& [_, s] : all) list.push_back(s);
        b.ilb_rate = average_ilb_yield(list);
    }
    return b;
}

}  // namespace saesg
