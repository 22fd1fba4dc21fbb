#include <algorithm>
#include <cmath>
#include <cstring>

#include <doctest.h>

#include "reference_params.hpp"
#include "saesg/simulation.hpp"
#include "test_util.hpp"

using namespace saesg;
using doctest::Approx;

namespace {

CascadeParams inflation_only() {
    CascadeParams m;
    m[SeriesKind::inflation] = reference::submodel(reference::inflation());
    return m;
}

SimulationOptions opts(long paths, int horizon, std::uint64_t seed = 7, unsigned threads = 1) {
    SimulationOptions o;
    o.n_paths = paths;
    o.horizon = horizon;
    o.seed = seed;
    o.threads = threads;
    return o;
}

}  // namespace

TEST_CASE("counter-based normals") {
    CHECK(normal_variate(1, 2, SeriesKind::dividend, 3) == normal_variate(1, 2, SeriesKind::dividend, 3));
    CHECK(normal_variate(1, 2, SeriesKind::dividend, 3) != normal_variate(1, 2, SeriesKind::long_rate, 3));
    CHECK(normal_variate(1, 2, SeriesKind::dividend, 3) != normal_variate(2, 2, SeriesKind::dividend, 3));

    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = normal_variate(123, static_cast<std::uint64_t>(i / 10), SeriesKind::inflation,
                                        static_cast<std::uint32_t>(i % 10));
        sum += z;
        sum2 += z * z;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean) < 0.004);
    CHECK(std::abs(std::sqrt(sum2 / n - mean * mean) - 1.0) < 0.004);

    std::vector<double> draws(100000);
    for (std::size_t i = 0; i < draws.size(); ++i) draws[i] = normal_variate(9, i, SeriesKind::short_rate, 0);
    std::sort(draws.begin(), draws.end());
    CHECK(std::abs(empirical_quantile(draws, 0.975) - 1.96) < 0.02);
}

TEST_CASE("empirical quantile interpolation") {
    const std::vector<double> s = {1.0, 2.0, 3.0, 4.0};
    // rank p (n + 1): p = 0.5 -> 2.5 -> halfway between 2 and 3.
    CHECK(empirical_quantile(s, 0.5) == 2.5);
    CHECK(empirical_quantile(s, 0.3) == Approx(1.5));
    CHECK(empirical_quantile(s, 0.01) == 1.0);
    CHECK(empirical_quantile(s, 0.99) == 4.0);
}

TEST_CASE("zero noise gives the deterministic mean path") {
    CascadeParams m = reference::cascade(true);
    for (auto& [kind, sub] : m) sub.params.set(sigma_name(kind), 0.0);
    const auto state = neutral_state(m);
    const auto s = simulate(m, state, opts(20, 5));
    for (const auto& [name, mat] : s.series) {
        for (int k = 0; k < 5; ++k) {
            CHECK(mat.col(k).maxCoeff() == mat.col(k).minCoeff());
        }
    }
    CHECK(s.series.at("inflation")(0, 0) == Approx(0.0809).epsilon(1e-15));
    CHECK(s.series.at("long_rate")(0, 4) == Approx(0.0809 + std::exp(-3.3892)).epsilon(1e-12));
}

TEST_CASE("h-step inflation moments") {
    const auto m = inflation_only();
    const auto s = simulate(m, neutral_state(m), opts(100000, 10, 2019));
    const auto col = s.series.at("inflation").col(9);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(col.size()));
    double var = 0.0;
    for (int k = 0; k < 10; ++k) var += std::pow(0.8433, 2 * k);
    CHECK(std::abs(mean - 0.0809) < 0.001);
    CHECK(std::abs(sd / (0.0220 * std::sqrt(var)) - 1.0) < 0.02);
}

TEST_CASE("path identities") {
    const auto m = reference::cascade(true);
    const auto s = simulate(m, neutral_state(m), opts(500, 10, 3));
    const auto& q = s.series.at("inflation");
    const auto& cpi = s.series.at("cpi_index");
    const auto& y = s.series.at("dividend_yield");
    const auto& d = s.series.at("dividend_index");
    const auto& p = s.series.at("share_price_index");
    const auto& dc = s.series.at("long_rate");
    const auto& db = s.series.at("short_rate");
    const auto& bd = s.series.at("log_spread");
    for (long i = 0; i < s.n_paths; ++i) {
        double prev = 100.0;
        for (int k = 0; k < s.horizon; ++k) {
            CHECK(cpi(i, k) == prev * std::exp(q(i, k)));
            prev = cpi(i, k);
            CHECK(std::abs(p(i, k) * y(i, k) / d(i, k) - 1.0) < 1e-10);
            CHECK(db(i, k) == dc(i, k) * std::exp(-bd(i, k)));
            CHECK(dc(i, k) > 0.0);
        }
    }
}

TEST_CASE("threaded simulation is bitwise identical") {
    const auto m = reference::cascade(true);
    const auto a = simulate(m, neutral_state(m), opts(999, 10, 5, 1));
    const auto b = simulate(m, neutral_state(m), opts(999, 10, 5, 4));
    const auto c = simulate(m, neutral_state(m), opts(999, 10, 5, 1));
    for (const auto& [name, mat] : a.series) {
        CHECK(std::memcmp(mat.data(), b.series.at(name).data(), sizeof(double) * mat.size()) == 0);
        CHECK(std::memcmp(mat.data(), c.series.at(name).data(), sizeof(double) * mat.size()) == 0);
    }
}

TEST_CASE("fan properties") {
    const auto m = reference::cascade();
    const auto s = simulate(m, neutral_state(m), opts(4000, 10, 8));
    const auto f = fan(s);
    for (const auto& [name, rows] : f.series) {
        REQUIRE(rows.size() == 10);
        for (const auto& row : rows) {
            CHECK(row.lower(0.99) <= row.lower(0.95));
            CHECK(row.upper(0.95) <= row.upper(0.99));
            CHECK(row.lower(0.95) <= row.quantiles.at(0.5));
        }
    }
    const auto& infl = f.series.at("inflation");
    for (std::size_t k = 1; k < infl.size(); ++k) {
        CHECK(infl[k].upper(0.95) - infl[k].lower(0.95) >= 0.97 * (infl[k - 1].upper(0.95) - infl[k - 1].lower(0.95)));
    }

    ScenarioSet flat;
    flat.n_paths = 1000;
    flat.horizon = 2;
    flat.series["x"] = PathMatrix::Constant(1000, 2, 0.25);
    const auto flat_fan = fan(flat);
    for (const auto& row : flat_fan.series.at("x")) {
        for (const auto& [p, v] : row.quantiles) CHECK(v == 0.25);
    }

    ScenarioSet tiny = flat;
    tiny.n_paths = 100;
    tiny.series["x"] = PathMatrix::Constant(100, 2, 0.25);
    CHECK_THROWS_AS(fan(tiny), SimulationError);
}

TEST_CASE("normal samples give normal fan quantiles") {
    ScenarioSet s;
    s.n_paths = 100000;
    s.horizon = 1;
    PathMatrix m(s.n_paths, 1);
    for (long i = 0; i < s.n_paths; ++i) m(i, 0) = normal_variate(77, static_cast<std::uint64_t>(i), SeriesKind::ilb, 0);
    s.series["z"] = m;
    const auto row = fan(s).series.at("z").front();
    CHECK(std::abs(row.lower(0.95) + 1.96) < 0.02);
    CHECK(std::abs(row.upper(0.95) - 1.96) < 0.02);
}

TEST_CASE("initial states and dependencies") {
    const auto m = inflation_only();
    const auto s = neutral_state(m);
    CHECK(s.delta_q_prev == 0.0809);

    CascadeParams broken = m;
    broken[SeriesKind::dividend] = reference::submodel(reference::dividend());
    try {
        check_dependencies(broken);
        FAIL("expected SimulationError");
    } catch (const SimulationError& e) {
        CHECK(std::string(e.what()).find("dividend_yield") != std::string::npos);
    }

    DataBundle data;
    data.inflation = AnnualSeries(1960, testutil::ar1_path(49, 0.08, 0.8, 0.02, 1));
    const auto fits = fit_cascade({{SeriesKind::inflation, reference::inflation().spec}}, data, FitOptions{});
    CHECK(initial_state_from_fits(fits).delta_q_prev == data.inflation->at_year(2008));

    DataBundle both = data;
    both.dividend_growth = AnnualSeries(1960, testutil::ar1_path(49, 0.05, 0.0, 0.1, 2));
    CHECK_THROWS_AS(fit_cascade({{SeriesKind::dividend, reference::dividend().spec}}, both, FitOptions{}), SimulationError);
}

TEST_CASE("cascade fit feeds yield residuals to dividends") {
    const auto m = reference::cascade();
    auto o = opts(1, 60, 31);
    o.start_year = 1960;
    const auto s = simulate(m, neutral_state(m), o);
    DataBundle data;
    auto row = [&](const char* name) { return Eigen::VectorXd(s.series.at(name).row(0).transpose()); };
    data.inflation = AnnualSeries(1960, row("inflation"));
    data.dividend_yield = AnnualSeries(1960, row("dividend_yield"));
    data.dividend_growth = AnnualSeries(1960, row("dividend_growth"));
    std::map<SeriesKind, ModelSpec> specs = {{SeriesKind::dividend_yield, reference::dividend_yield().spec},
                                             {SeriesKind::dividend, reference::dividend().spec}};
    const auto fits = fit_cascade(specs, data, FitOptions{});
    REQUIRE(fits.size() == 2);

    DataBundle with_eps = data;
    with_eps.yield_residuals = fits.at(SeriesKind::dividend_yield).residuals;
    CHECK(neg_log_likelihood(specs.at(SeriesKind::dividend), fits.at(SeriesKind::dividend).params, with_eps) ==
          Approx(-fits.at(SeriesKind::dividend).log_likelihood).epsilon(1e-14));
}

TEST_CASE("backtest guards") {
    DataBundle data;
    data.inflation = AnnualSeries(1960, testutil::ar1_path(40, 0.08, 0.8, 0.02, 1));
    BacktestOptions o;
    o.specs = {{SeriesKind::inflation, reference::inflation().spec}};
    o.split_year = 1999;
    o.n_paths = 1000;
    CHECK_THROWS_AS(backtest(data, o), SimulationError);

    o.split_year = 1990;
    const auto r = backtest(data, o);
    REQUIRE(r.cells.at("inflation").size() == 9);
    CHECK(r.cells.at("inflation").front().year == 1991);
    CHECK(r.fits.at(SeriesKind::inflation).residuals.end_year() == 1990);
    const auto& c = r.cells.at("inflation").front();
    CHECK(c.inside_95 == (c.observed >= c.lo95 && c.observed <= c.hi95));
}

TEST_CASE("index levels can be switched off for long horizons") {
    CascadeParams m;
    m[SeriesKind::inflation] = reference::submodel(reference::inflation());
    auto o = opts(1, 20000, 4);
    CHECK_THROWS_AS(simulate(m, neutral_state(m), o), SimulationError);
    o.index_levels = false;
    const auto s = simulate(m, neutral_state(m), o);
    CHECK(s.series.count("cpi_index") == 0);
    CHECK(std::isfinite(s.series.at("inflation")(0, 19999)));

    auto short_run = opts(50, 5, 4);
    const auto with = simulate(m, neutral_state(m), short_run);
    short_run.index_levels = false;
    const auto without = simulate(m, neutral_state(m), short_run);
    CHECK(with.series.at("inflation") == without.series.at("inflation"));
}
