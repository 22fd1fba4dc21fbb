#include <cmath>

#include <doctest.h>

#include "saesg/hessian.hpp"
#include "saesg/nelder_mead.hpp"
#include "test_util.hpp"

using namespace saesg;
using doctest::Approx;
using Vec = Eigen::VectorXd;

TEST_CASE("one-dimensional quadratic") {
    auto f = [](const Vec& x) { return (x(0) - 3.0) * (x(0) - 3.0); };
    const auto r = nelder_mead<double>(f, Vec::Zero(1), OptimizerConfig{});
    CHECK(r.converged);
    CHECK(r.x(0) == Approx(3.0).epsilon(1e-6));
}

TEST_CASE("Rosenbrock") {
    auto f = [](const Vec& x) {
        const double a = 1.0 - x(0);
        const double b = x(1) - x(0) * x(0);
        return a * a + 100.0 * b * b;
    };
    Vec x0(2);
    x0 << -1.2, 1.0;
    OptimizerConfig cfg;
    cfg.f_tol = 1e-14;
    const auto r = nelder_mead<double>(f, x0, cfg);
    CHECK(std::abs(r.x(0) - 1.0) < 1e-4);
    CHECK(std::abs(r.x(1) - 1.0) < 1e-4);
}

TEST_CASE("kinked objective") {
    auto f = [](const Vec& x) { return std::abs(x(0)); };
    OptimizerConfig cfg;
    cfg.f_tol = 1e-12;
    const auto r = nelder_mead<double>(f, Vec::Ones(1), cfg);
    CHECK(std::abs(r.x(0)) < 1e-6);
}

TEST_CASE("never worse than the start, and barriers are respected") {
    // +inf outside the unit disc.
    auto f = [](const Vec& x) {
        const double r2 = x.squaredNorm();
        return r2 >= 1.0 ? std::numeric_limits<double>::infinity() : (x(0) - 2.0) * (x(0) - 2.0) + x(1) * x(1);
    };
    Vec x0(2);
    x0 << 0.1, 0.1;
    const auto r = nelder_mead<double>(f, x0, OptimizerConfig{});
    CHECK(r.f <= f(x0));
    CHECK(r.x.squaredNorm() < 1.0);
    CHECK(r.x(0) == Approx(1.0).epsilon(1e-3));
}

TEST_CASE("float scalar instantiation") {
    auto f = [](const Eigen::VectorXf& x) { return (x.array() - 1.5f).square().sum(); };
    OptimizerConfig cfg;
    cfg.f_tol = 1e-8;
    cfg.x_tol = 1e-5;
    const auto r = nelder_mead<float>(f, Eigen::VectorXf::Zero(3), cfg);
    CHECK((r.x.array() - 1.5f).abs().maxCoeff() < 1e-2f);
}

TEST_CASE("iteration cap and bad starts") {
    auto f = [](const Vec& x) { return x.squaredNorm(); };
    OptimizerConfig cfg;
    cfg.max_iter = 3;
    cfg.restarts = 0;
    const auto r = nelder_mead<double>(f, Vec::Constant(4, 5.0), cfg);
    CHECK_FALSE(r.converged);

    auto bad = [](const Vec&) { return std::nan(""); };
    CHECK_THROWS_AS(nelder_mead<double>(bad, Vec::Zero(2), OptimizerConfig{}), std::domain_error);

    OptimizerConfig invalid;
    invalid.contraction = 1.5;
    CHECK_THROWS_AS(invalid.validate(), std::invalid_argument);
}

TEST_CASE("standard error of a normal mean") {
    const Vec x = testutil::ar1_path(400, 0.3, 0.0, 1.0, 17);
    auto nll = [&](const Vec& m) { return 0.5 * (x.array() - m(0)).square().sum(); };
    Vec at(1);
    at << x.mean();
    const auto se = standard_errors<double>(nll, at);
    REQUIRE(se.std_errors.has_value());
    CHECK((*se.std_errors)(0) == Approx(1.0 / std::sqrt(400.0)).epsilon(1e-4));
}

TEST_CASE("standard error of a quadratic") {
    const double k = 37.0;
    auto f = [&](const Vec& x) { return 0.5 * k * (x(0) - 2.0) * (x(0) - 2.0); };
    const auto se = standard_errors<double>(f, Vec::Constant(1, 2.0));
    REQUIRE(se.std_errors.has_value());
    CHECK((*se.std_errors)(0) == Approx(1.0 / std::sqrt(k)).epsilon(1e-6));
    CHECK(hessian_step(0.0) == 1e-5);
    CHECK(hessian_step(3.0) == Approx(3e-4));
}

TEST_CASE("flat direction gives no standard errors") {
    auto f = [](const Vec& x) { return 0.5 * x(0) * x(0); };
    const auto se = standard_errors<double>(f, Vec::Zero(2));
    CHECK_FALSE(se.std_errors.has_value());
}
