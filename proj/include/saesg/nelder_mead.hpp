#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace saesg {

struct OptimizerConfig {
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    double f_tol = 1e-10;
    double x_tol = 1e-8;
    long max_iter = 50000;
    /// Per-coordinate simplex offsets; empty means 0.1*|x0_i|, or 0.01 when x0_i == 0.
    Eigen::VectorXd initial_step;
    int restarts = 2;

    void validate() const {
        if (!(f_tol > 0.0) || !(x_tol > 0.0)) throw std::invalid_argument("optimizer tolerances must be positive");
        if (!(reflection > 0.0) || !(expansion > 1.0) || !(contraction > 0.0 && contraction < 1.0) ||
            !(shrink > 0.0 && shrink < 1.0) || expansion <= reflection) {
            throw std::invalid_argument("invalid simplex coefficients");
        }
        if (max_iter < 1 || restarts < 0) throw std::invalid_argument("invalid iteration limits");
    }
};

template <typename Scalar>
struct MinimizeResult {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
    Scalar f;
    long iterations = 0;
    bool converged = false;
};

namespace detail {

template <typename Scalar, typename Objective>
Scalar evaluate(Objective& objective, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) {
    const Scalar f = objective(x);
    // NaN compares false everywhere; treat it as +inf so the simplex moves away.
    return std::isnan(f) ? std::numeric_limits<Scalar>::infinity() : f;
}

}  // namespace detail

/*
 * Nelder-Mead downhill simplex. Each pass iterates until the spread of
 * objective values across the simplex drops below f_tol or its diameter
 * (largest vertex distance from the best vertex) below x_tol. A restart
 * builds a fresh simplex around the incumbent; the best point seen is kept.
 * Running out of iterations is reported through `converged`, not thrown.
 */
template <typename Scalar, typename Objective>
MinimizeResult<Scalar> nelder_mead(Objective&& objective, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x0,
                                   const OptimizerConfig& config = {}) {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    config.validate();
    const Eigen::Index n = x0.size();
    if (n < 1) throw std::invalid_argument("nelder_mead: dimension must be at least 1");
    if (config.initial_step.size() != 0 && config.initial_step.size() != n) {
        throw std::invalid_argument("nelder_mead: initial_step has wrong dimension");
    }

    MinimizeResult<Scalar> best;
    best.x = x0;
    best.f = detail::evaluate<Scalar>(objective, x0);
    if (!std::isfinite(static_cast<double>(best.f))) {
        throw std::domain_error("nelder_mead: objective is not finite at the starting point");
    }

    const Scalar alpha = config.reflection;
    const Scalar gamma = config.expansion;
    const Scalar rho = config.contraction;
    const Scalar sigma = config.shrink;

    std::vector<Vector> simplex(n + 1);
    std::vector<Scalar> values(n + 1);
    std::vector<Eigen::Index> order(n + 1);

    long iterations = 0;
    bool last_pass_converged = false;
    for (int pass = 0; pass <= config.restarts; ++pass) {
        const Vector start = best.x;
        simplex[0] = start;
        values[0] = best.f;
        for (Eigen::Index i = 0; i < n; ++i) {
            Vector v = start;
            Scalar step;
            if (config.initial_step.size() == n) {
                step = config.initial_step(i);
            } else {
                step = start(i) != Scalar(0) ? Scalar(0.1) * std::abs(start(i)) : Scalar(0.01);
            }
            v(i) += step;
            simplex[i + 1] = v;
            values[i + 1] = detail::evaluate<Scalar>(objective, v);
        }

        last_pass_converged = false;
        while (iterations < config.max_iter) {
            std::iota(order.begin(), order.end(), Eigen::Index{0});
            std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
            const Eigen::Index lo = order.front();
            const Eigen::Index hi = order.back();
            const Eigen::Index second_hi = order[n - 1];

            Scalar diameter = 0;
            for (Eigen::Index i = 0; i <= n; ++i) {
                diameter = std::max(diameter, (simplex[i] - simplex[lo]).template lpNorm<Eigen::Infinity>());
            }
            const Scalar spread = values[hi] - values[lo];
            if ((std::isfinite(static_cast<double>(spread)) && spread < config.f_tol) || diameter < config.x_tol) {
                last_pass_converged = true;
                break;
            }
            ++iterations;

            Vector centroid = Vector::Zero(n);
            for (Eigen::Index i = 0; i <= n; ++i) {
                if (i != hi) centroid += simplex[i];
            }
            centroid /= static_cast<Scalar>(n);

            const Vector reflected = centroid + alpha * (centroid - simplex[hi]);
            const Scalar f_reflected = detail::evaluate<Scalar>(objective, reflected);

            if (f_reflected < values[lo]) {
                const Vector expanded = centroid + gamma * (reflected - centroid);
                const Scalar f_expanded = detail::evaluate<Scalar>(objective, expanded);
                if (f_expanded < f_reflected) {
                    simplex[hi] = expanded;
                    values[hi] = f_expanded;
                } else {
                    simplex[hi] = reflected;
                    values[hi] = f_reflected;
                }
                continue;
            }
            if (f_reflected < values[second_hi]) {
                simplex[hi] = reflected;
                values[hi] = f_reflected;
                continue;
            }

            // Contraction: outside if the reflection improved on the worst vertex, inside otherwise.
            const bool outside = f_reflected < values[hi];
            const Vector contracted = outside ? Vector(centroid + rho * (reflected - centroid))
                                              : Vector(centroid + rho * (simplex[hi] - centroid));
            const Scalar f_contracted = detail::evaluate<Scalar>(objective, contracted);
            if (f_contracted < (outside ? f_reflected : values[hi])) {
                simplex[hi] = contracted;
                values[hi] = f_contracted;
                continue;
            }

            for (Eigen::Index i = 0; i <= n; ++i) {
                if (i == lo) continue;
                simplex[i] = simplex[lo] + sigma * (simplex[i] - simplex[lo]);
                values[i] = detail::evaluate<Scalar>(objective, simplex[i]);
            }
        }

        const auto best_vertex = std::distance(values.begin(), std::min_element(values.begin(), values.end()));
        if (values[best_vertex] <= best.f) {
            best.f = values[best_vertex];
            best.x = simplex[best_vertex];
        }
        if (!last_pass_converged) break;
    }

    best.iterations = iterations;
    best.converged = last_pass_converged;
    return best;
}

}  // namespace saesg
