#pragma once

#include <map>
#include <stdexcept>

#include <Eigen/Dense>

namespace saesg {

class DiagnosticsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Moments {
    double skewness;
    double kurtosis;  ///< raw; 3 for a normal distribution
};

struct JarqueBera {
    double statistic;
    double p_value;
};

struct DiagnosticsReport {
    std::map<int, double> r_z;   ///< residual autocorrelations by lag
    std::map<int, double> r_z2;  ///< autocorrelations of squared residuals
    double skewness = 0.0;
    double kurtosis = 0.0;
    double jarque_bera = 0.0;
    double jb_p_value = 1.0;
    /// Lags whose |r| exceeds 2/sqrt(n), for either acf.
    std::map<int, bool> r_z_flag;
    std::map<int, bool> r_z2_flag;
    long n = 0;
};

enum class KpssLevel { ten_percent, five_percent, one_percent };

struct KpssResult {
    double statistic = 0.0;
    int bandwidth = 0;
    std::map<KpssLevel, bool> reject;
};

/// 0.347 / 0.463 / 0.739.
double kpss_critical_value(KpssLevel level);

/// Autocorrelations r(0..max_lag) with divide-by-n normalisation.
std::map<int, double> acf(const Eigen::Ref<const Eigen::VectorXd>& x, int max_lag);

/// Skewness m3/m2^1.5 and kurtosis m4/m2^2 with divide-by-n central moments.
Moments moments(const Eigen::Ref<const Eigen::VectorXd>& x);

/// JB = n/6 (S^2 + (K-3)^2/4), p = exp(-JB/2).
JarqueBera jarque_bera(long n, double skewness, double kurtosis);
JarqueBera jarque_bera(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Level-stationarity KPSS test with a Bartlett long-run variance.
KpssResult kpss_level(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Full residual battery; max_lag is clipped to n - 2.
DiagnosticsReport diagnose_residuals(const Eigen::Ref<const Eigen::VectorXd>& residuals, int max_lag = 10);

}  // namespace saesg
