#include "saesg/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace saesg {

namespace {

Eigen::VectorXd centred(const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() == 0) throw DiagnosticsError("empty series");
    Eigen::VectorXd c = x.array() - x.mean();
    return c;
}

double central_moment(const Eigen::VectorXd& c, int order) {
    return c.array().pow(order).mean();
}

}  // namespace

double kpss_critical_value(KpssLevel level) {
    switch (level) {
        case KpssLevel::ten_percent: return 0.347;
        case KpssLevel::five_percent: return 0.463;
        case KpssLevel::one_percent: return 0.739;
    }
    return 0.0;
}

std::map<int, double> acf(const Eigen::Ref<const Eigen::VectorXd>& x, int max_lag) {
    const Eigen::Index n = x.size();
    if (max_lag < 0 || n < max_lag + 2) throw DiagnosticsError("acf: series too short for the requested lag");
    const Eigen::VectorXd c = centred(x);
    const double denom = c.squaredNorm();
    if (!(denom > 0.0)) throw DiagnosticsError("acf: zero variance");
    std::map<int, double> r;
    for (int k = 0; k <= max_lag; ++k) {
        r[k] = c.head(n - k).dot(c.tail(n - k)) / denom;
    }
    return r;
}

Moments moments(const Eigen::Ref<const Eigen::VectorXd>& x) {
    const Eigen::VectorXd c = centred(x);
    const double m2 = central_moment(c, 2);
    if (!(m2 > 0.0)) throw DiagnosticsError("moments: zero variance");
    return {central_moment(c, 3) / std::pow(m2, 1.5), central_moment(c, 4) / (m2 * m2)};
}

JarqueBera jarque_bera(long n, double skewness, double kurtosis) {
    const double excess = kurtosis - 3.0;
    const double jb = static_cast<double>(n) / 6.0 * (skewness * skewness + excess * excess / 4.0);
    // chi-square(2) survival function
    return {jb, std::exp(-jb / 2.0)};
}

JarqueBera jarque_bera(const Eigen::Ref<const Eigen::VectorXd>& x) {
    const Moments m = moments(x);
    return jarque_bera(static_cast<long>(x.size()), m.skewness, m.kurtosis);
}

KpssResult kpss_level(const Eigen::Ref<const Eigen::VectorXd>& x) {
    const Eigen::Index n = x.size();
    if (n < 10) throw DiagnosticsError("kpss_level: need at least 10 observations");
    const Eigen::VectorXd e = centred(x);
    const double gamma0 = e.squaredNorm() / static_cast<double>(n);
    if (!(gamma0 > 0.0)) throw DiagnosticsError("kpss_level: zero variance");

    KpssResult out;
    out.bandwidth = static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
    out.bandwidth = std::min<int>(out.bandwidth, static_cast<int>(n) - 1);

    double long_run = gamma0;
    for (int k = 1; k <= out.bandwidth; ++k) {
        const double gamma_k = e.head(n - k).dot(e.tail(n - k)) / static_cast<double>(n);
        long_run += 2.0 * (1.0 - static_cast<double>(k) / (out.bandwidth + 1.0)) * gamma_k;
    }

    double partial = 0.0;
    double sum_sq = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
        partial += e(t);
        sum_sq += partial * partial;
    }
    out.statistic = sum_sq / (static_cast<double>(n) * static_cast<double>(n) * long_run);
    for (KpssLevel level : {KpssLevel::ten_percent, KpssLevel::five_percent, KpssLevel::one_percent}) {
        out.reject[level] = out.statistic > kpss_critical_value(level);
    }
    return out;
}

DiagnosticsReport diagnose_residuals(const Eigen::Ref<const Eigen::VectorXd>& residuals, int max_lag) {
    const Eigen::Index n = residuals.size();
    if (n < 3) throw DiagnosticsError("diagnose_residuals: need at least 3 residuals");
    const int lag = std::min<int>(max_lag, static_cast<int>(n) - 2);

    DiagnosticsReport report;
    report.n = static_cast<long>(n);
    const double bound = 2.0 / std::sqrt(static_cast<double>(n));
    for (auto [k, r] : acf(residuals, lag)) {
        if (k == 0) continue;
        report.r_z[k] = r;
        report.r_z_flag[k] = std::abs(r) > bound;
    }
    const Eigen::VectorXd squared = residuals.array().square();
    // Squared residuals of a two-point distribution are constant; report zeros then.
    const Eigen::VectorXd sq_c = squared.array() - squared.mean();
    if (sq_c.squaredNorm() > 0.0) {
        for (auto [k, r] : acf(squared, lag)) {
            if (k == 0) continue;
            report.r_z2[k] = r;
            report.r_z2_flag[k] = std::abs(r) > bound;
        }
    } else {
        for (int k = 1; k <= lag; ++k) {
            report.r_z2[k] = 0.0;
            report.r_z2_flag[k] = false;
        }
    }
    const Moments m = moments(residuals);
    report.skewness = m.skewness;
    report.kurtosis = m.kurtosis;
    const JarqueBera jb = jarque_bera(report.n, m.skewness, m.kurtosis);
    report.jarque_bera = jb.statistic;
    report.jb_p_value = jb.p_value;
    return report;
}

}  // namespace saesg
