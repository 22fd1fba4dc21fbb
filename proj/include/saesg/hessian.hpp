#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Dense>

namespace saesg {

/// Step used for coordinate i of the finite-difference Hessian.
template <typename Scalar>
Scalar hessian_step(Scalar x) {
    return std::max(Scalar(1e-5), Scalar(1e-4) * std::abs(x));
}

/// Central-difference Hessian of `objective` at x.
template <typename Scalar, typename Objective>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> numerical_hessian(
    Objective&& objective, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const Eigen::Index n = x.size();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> h(n, n);
    Vector steps(n);
    for (Eigen::Index i = 0; i < n; ++i) steps(i) = hessian_step(x(i));

    const Scalar f0 = objective(x);
    auto shifted = [&](Eigen::Index i, Scalar si, Eigen::Index j, Scalar sj) {
        Vector p = x;
        p(i) += si * steps(i);
        p(j) += sj * steps(j);
        return objective(p);
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector p = x;
        p(i) += steps(i);
        const Scalar f_plus = objective(p);
        p(i) = x(i) - steps(i);
        const Scalar f_minus = objective(p);
        h(i, i) = (f_plus - Scalar(2) * f0 + f_minus) / (steps(i) * steps(i));
        for (Eigen::Index j = 0; j < i; ++j) {
            const Scalar v = (shifted(i, 1, j, 1) - shifted(i, 1, j, -1) - shifted(i, -1, j, 1) +
                              shifted(i, -1, j, -1)) /
                             (Scalar(4) * steps(i) * steps(j));
            h(i, j) = v;
            h(j, i) = v;
        }
    }
    return h;
}

template <typename Scalar>
struct StandardErrorResult {
    /// Absent when the information matrix is not positive definite.
    std::optional<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> std_errors;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> hessian;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> covariance;
};

/*
 * Standard errors from the inverse observed information: `objective` is a
 * negative log-likelihood and x_min its minimiser. The Hessian is factored
 * with a pivoted LDL^T; any pivot that is non-positive or negligible relative
 * to the largest one marks the information as singular.
 */
template <typename Scalar, typename Objective>
StandardErrorResult<Scalar> standard_errors(Objective&& objective,
                                            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x_min) {
    StandardErrorResult<Scalar> out;
    out.hessian = numerical_hessian<Scalar>(objective, x_min);
    const Eigen::Index n = x_min.size();
    if (!out.hessian.allFinite()) return out;

    const Eigen::LDLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> ldlt(out.hessian);
    if (ldlt.info() != Eigen::Success) return out;
    const auto d = ldlt.vectorD();
    const Scalar largest = d.cwiseAbs().maxCoeff();
    const Scalar floor = largest * Scalar(n) * Scalar(1e3) * std::numeric_limits<Scalar>::epsilon();
    if (!(largest > Scalar(0))) return out;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(d(i) > floor)) return out;
    }
    out.covariance = ldlt.solve(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Identity(n, n));
    const auto diag = out.covariance.diagonal();
    if ((diag.array() <= Scalar(0)).any()) return out;
    out.std_errors = diag.cwiseSqrt();
    return out;
}

}  // namespace saesg
