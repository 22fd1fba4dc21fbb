#include "saesg/model_spec.hpp"

#include <algorithm>
#include <cmath>

namespace saesg {

std::string to_string(SeriesKind kind) {
    switch (kind) {
        case SeriesKind::inflation: return "inflation";
        case SeriesKind::dividend_yield: return "dividend_yield";
        case SeriesKind::dividend: return "dividend";
        case SeriesKind::long_rate: return "long_rate";
        case SeriesKind::short_rate: return "short_rate";
        case SeriesKind::ilb: return "ilb";
    }
    return "unknown";
}

std::string to_string(Variant variant) {
    switch (variant) {
        case Variant::ar1: return "ar1";
        case Variant::ma_inflation: return "ma_inflation";
        case Variant::yield_only: return "yield_only";
        case Variant::simultaneous_inflation: return "simultaneous_inflation";
        case Variant::ar1_log: return "ar1_log";
        case Variant::ar1_spread: return "ar1_spread";
        case Variant::both_rates: return "both_rates";
        case Variant::long_only: return "long_only";
        case Variant::short_with_mean: return "short_with_mean";
        case Variant::short_no_mean: return "short_no_mean";
    }
    return "unknown";
}

SeriesKind series_from_string(const std::string& name) {
    for (SeriesKind kind : kAllSeries) {
        if (to_string(kind) == name) return kind;
    }
    throw ModelError("unknown series '" + name + "'");
}

Variant variant_from_string(const std::string& name) {
    for (int i = 0; i <= static_cast<int>(Variant::short_no_mean); ++i) {
        const auto v = static_cast<Variant>(i);
        if (to_string(v) == name) return v;
    }
    throw ModelError("unknown variant '" + name + "'");
}

std::vector<Variant> variants_for(SeriesKind kind) {
    switch (kind) {
        case SeriesKind::inflation: return {Variant::ar1};
        case SeriesKind::dividend_yield: return {Variant::ar1, Variant::ma_inflation};
        case SeriesKind::dividend:
            return {Variant::yield_only, Variant::simultaneous_inflation, Variant::ma_inflation};
        case SeriesKind::long_rate: return {Variant::ar1_log, Variant::ma_inflation};
        case SeriesKind::short_rate: return {Variant::ar1_spread};
        case SeriesKind::ilb:
            return {Variant::ar1, Variant::both_rates, Variant::long_only, Variant::short_with_mean,
                    Variant::short_no_mean};
    }
    return {};
}

std::string sigma_name(SeriesKind kind) {
    switch (kind) {
        case SeriesKind::inflation: return "sigma_q";
        case SeriesKind::dividend_yield: return "sigma_y";
        case SeriesKind::dividend: return "sigma_d";
        case SeriesKind::long_rate: return "sigma_c";
        case SeriesKind::short_rate: return "sigma_b";
        case SeriesKind::ilb: return "sigma_r";
    }
    return {};
}

std::vector<ParamInfo> parameter_layout(SeriesKind kind, Variant variant) {
    using R = ParamRole;
    switch (kind) {
        case SeriesKind::inflation:
            return {{"mu_q", R::free}, {"a_q", R::autoregressive}, {"sigma_q", R::scale}};
        case SeriesKind::dividend_yield:
            if (variant == Variant::ma_inflation) {
                return {{"w_y", R::free},
                        {"d_y", R::weight},
                        {"mu_y", R::free},
                        {"a_y", R::autoregressive},
                        {"sigma_y", R::scale}};
            }
            return {{"mu_y", R::free}, {"a_y", R::autoregressive}, {"sigma_y", R::scale}};
        case SeriesKind::dividend: {
            std::vector<ParamInfo> layout;
            if (variant == Variant::ma_inflation) {
                layout.push_back({"w_d", R::free});
                layout.push_back({"d_d", R::weight});
            } else if (variant == Variant::simultaneous_inflation) {
                layout.push_back({"q_d", R::free});
            }
            layout.push_back({"mu_d", R::free});
            layout.push_back({"y_d", R::free});
            layout.push_back({"k_d", R::autoregressive});
            layout.push_back({"sigma_d", R::scale});
            return layout;
        }
        case SeriesKind::long_rate:
            if (variant == Variant::ma_inflation) {
                return {{"w_c", R::free},
                        {"d_c", R::weight},
                        {"ln_mu_c", R::free},
                        {"a_c", R::autoregressive},
                        {"sigma_c", R::scale}};
            }
            return {{"ln_mu_c", R::free}, {"a_c", R::autoregressive}, {"sigma_c", R::scale}};
        case SeriesKind::short_rate:
            return {{"mu_b", R::free}, {"a_b", R::autoregressive}, {"sigma_b", R::scale}};
        case SeriesKind::ilb: {
            std::vector<ParamInfo> layout;
            if (variant != Variant::short_no_mean) layout.push_back({"mu_r", R::free});
            layout.push_back({"a_r", R::autoregressive});
            if (variant == Variant::both_rates || variant == Variant::long_only) {
                layout.push_back({"c_r", R::free});
            }
            if (variant == Variant::both_rates || variant == Variant::short_with_mean ||
                variant == Variant::short_no_mean) {
                layout.push_back({"b_r", R::free});
            }
            layout.push_back({"sigma_r", R::scale});
            return layout;
        }
    }
    return {};
}

void ModelSpec::validate() const {
    const auto allowed = variants_for(series);
    if (std::find(allowed.begin(), allowed.end(), variant) == allowed.end()) {
        throw ModelError("variant '" + to_string(variant) + "' is not defined for series '" +
                         to_string(series) + "'");
    }
    const auto layout = parameter_layout(series, variant);
    for (const auto& [name, value] : fixed) {
        const bool known = std::any_of(layout.begin(), layout.end(),
                                       [&](const ParamInfo& p) { return p.name == name; });
        if (!known) {
            throw ModelError("fixed parameter '" + name + "' is not part of " + to_string(series) +
                             "/" + to_string(variant));
        }
    }
    if (series == SeriesKind::dividend_yield && yield_unit != Unit::rate_decimal &&
        yield_unit != Unit::rate_percent) {
        throw ModelError("dividend yield unit must be rate_decimal or rate_percent");
    }
}

ModelSpec ModelSpec::make(SeriesKind series, Variant variant) {
    ModelSpec spec;
    spec.series = series;
    spec.variant = variant;
    if (series == SeriesKind::long_rate && variant == Variant::ma_inflation) {
        spec.fixed = {{"w_c", 1.0}, {"d_c", 0.13}};
    }
    spec.validate();
    return spec;
}

ParamSet ParamSet::from_values(const ModelSpec& spec, const std::map<std::string, double>& values) {
    std::vector<Parameter> params;
    for (const auto& info : parameter_layout(spec.series, spec.variant)) {
        Parameter p;
        p.name = info.name;
        if (const auto f = spec.fixed.find(info.name); f != spec.fixed.end()) {
            p.value = f->second;
            p.fixed = true;
        } else if (const auto v = values.find(info.name); v != values.end()) {
            p.value = v->second;
        } else {
            throw ModelError("missing value for parameter '" + info.name + "'");
        }
        params.push_back(std::move(p));
    }
    return ParamSet(std::move(params));
}

bool ParamSet::has(const std::string& name) const {
    return std::any_of(params_.begin(), params_.end(), [&](const Parameter& p) { return p.name == name; });
}

const Parameter& ParamSet::at(const std::string& name) const {
    for (const auto& p : params_) {
        if (p.name == name) return p;
    }
    throw ModelError("no parameter named '" + name + "'");
}

double ParamSet::get(const std::string& name) const { return at(name).value; }

double ParamSet::get_or(const std::string& name, double fallback) const {
    for (const auto& p : params_) {
        if (p.name == name) return p.value;
    }
    return fallback;
}

void ParamSet::set(const std::string& name, double value) {
    for (auto& p : params_) {
        if (p.name == name) {
            p.value = value;
            return;
        }
    }
    throw ModelError("no parameter named '" + name + "'");
}

Eigen::VectorXd ParamSet::values() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(params_.size()));
    for (std::size_t i = 0; i < params_.size(); ++i) v(static_cast<Eigen::Index>(i)) = params_[i].value;
    return v;
}

bool is_admissible(const ModelSpec& spec, const ParamSet& params) {
    for (const auto& info : parameter_layout(spec.series, spec.variant)) {
        if (!params.has(info.name)) return false;
        const double v = params.get(info.name);
        if (!std::isfinite(v)) return false;
        if (info.role == ParamRole::scale && !(v > 0.0)) return false;
        if (info.role == ParamRole::autoregressive && !(std::abs(v) < 1.0)) return false;
        if (info.role == ParamRole::weight && !(v >= 0.0 && v <= 1.0)) return false;
    }
    return true;
}

void check_admissible(const ModelSpec& spec, const ParamSet& params) {
    for (const auto& info : parameter_layout(spec.series, spec.variant)) {
        const double v = params.get(info.name);
        if (!std::isfinite(v)) throw ModelError(info.name + " is not finite");
        if (info.role == ParamRole::scale && !(v > 0.0)) throw ModelError(info.name + " must be positive");
        if (info.role == ParamRole::autoregressive && !(std::abs(v) < 1.0)) {
            throw ModelError(info.name + " must lie in (-1, 1)");
        }
        if (info.role == ParamRole::weight && !(v >= 0.0 && v <= 1.0)) {
            throw ModelError(info.name + " must lie in [0, 1]");
        }
    }
}

}  // namespace saesg
