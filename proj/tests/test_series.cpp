#include <cmath>
#include <functional>

#include <doctest.h>

#include "saesg/series.hpp"
#include "test_util.hpp"

using namespace saesg;
using doctest::Approx;

namespace {

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("load_series echoes a two-row file") {
    const auto dir = testutil::temp_dir("series_load");
    const auto path = testutil::write_file(dir / "cpi.csv", "year,value\n1959,100\n1960,110\n");
    const auto s = load_series(path, Unit::index_level);
    CHECK(s.start_year() == 1959);
    CHECK(s.end_year() == 1960);
    CHECK(s[0] == 100.0);
    CHECK(s[1] == 110.0);
    CHECK(s.unit() == Unit::index_level);
}

TEST_CASE("load_series rejects gaps, bad cells and duplicates") {
    const auto dir = testutil::temp_dir("series_bad");
    const auto gap = testutil::write_file(dir / "gap.csv", "year,value\n1960,1\n1962,2\n");
    CHECK(error_of([&] { load_series(gap, Unit::rate_decimal); }).find("1961") != std::string::npos);

    const auto bad = testutil::write_file(dir / "bad.csv", "year,value\n1960,1\n1961,abc\n");
    const auto msg = error_of([&] { load_series(bad, Unit::rate_decimal); });
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("non-numeric") != std::string::npos);

    const auto dup = testutil::write_file(dir / "dup.csv", "year,value\n1960,1\n1960,2\n");
    CHECK(error_of([&] { load_series(dup, Unit::rate_decimal); }).find("duplicate") != std::string::npos);

    const auto neg = testutil::write_file(dir / "neg.csv", "year,value\n1960,1\n1961,-2\n");
    CHECK_THROWS_AS(load_series(neg, Unit::index_level), DataError);
}

TEST_CASE("percent input is stored as decimal") {
    const auto dir = testutil::temp_dir("series_pct");
    const auto path = testutil::write_file(dir / "y.csv", "year,value\n1960,3.5\n1961,4\n");
    const auto s = load_series(path, Unit::rate_percent);
    CHECK(s[0] == Approx(0.035).epsilon(1e-15));
    CHECK(s.unit() == Unit::rate_decimal);
}

TEST_CASE("multi-series file splits on the series column") {
    const auto dir = testutil::temp_dir("series_multi");
    const auto path = testutil::write_file(
        dir / "ilb.csv", "series,year,value\nR197,2000,2\nR197,2001,3\nR189,2001,4\nR189,2002,5\n");
    const auto all = load_multi_series(path, Unit::rate_percent);
    REQUIRE(all.size() == 2);
    CHECK(all.at("R197").start_year() == 2000);
    CHECK(all.at("R189").end_year() == 2002);
    std::vector<AnnualSeries> list;
    for (const auto& [_, s] : all) list.push_back(s);
    const auto avg = average_ilb_yield(list);
    CHECK(avg.start_year() == 2000);
    CHECK(avg.size() == 3);
    CHECK(avg[0] == Approx(0.02));
    CHECK(avg[1] == Approx(0.035));
    CHECK(avg[2] == Approx(0.05));
}

TEST_CASE("force of inflation") {
    const auto dq = force_of_inflation(AnnualSeries(1959, {100.0, 110.0}, Unit::index_level));
    CHECK(dq.start_year() == 1960);
    CHECK(dq.size() == 1);
    CHECK(dq[0] == Approx(0.0953101798).epsilon(1e-9));

    const auto flat = force_of_inflation(AnnualSeries(1960, {7.0, 7.0, 7.0}, Unit::index_level));
    CHECK(flat.values().cwiseAbs().maxCoeff() == 0.0);

    const auto mean = force_of_inflation(AnnualSeries(1960, {100.0, 100.0 * std::exp(0.0809)}, Unit::index_level));
    CHECK(mean[0] == Approx(0.0809).epsilon(1e-12));

    CHECK_THROWS_AS(force_of_inflation(AnnualSeries(1960, {100.0}, Unit::index_level)), DataError);
}

TEST_CASE("dividends and growth") {
    CHECK(derive_dividends(AnnualSeries(2000, {1000.0}, Unit::index_level), AnnualSeries(2000, {0.035}))[0] ==
          Approx(35.0));
    CHECK(derive_dividends(AnnualSeries(2000, {2000.0}, Unit::index_level),
                           AnnualSeries(2000, {3.5}, Unit::rate_percent))[0] == Approx(70.0));
    CHECK(derive_dividends(AnnualSeries(2000, {5.0, 6.0}, Unit::index_level), AnnualSeries(2000, {0.0, 0.0}))
              .values()
              .isZero());

    CHECK(log_growth(AnnualSeries(2000, {35.0, 35.0}, Unit::index_level))[0] == 0.0);
    CHECK(log_growth(AnnualSeries(2000, {100.0, 105.0}, Unit::index_level))[0] == Approx(0.048790164).epsilon(1e-9));
    CHECK_THROWS_AS(log_growth(AnnualSeries(2000, {0.0, 5.0}, Unit::index_level)), DataError);
}

TEST_CASE("short rate from a money-market index") {
    CHECK(short_rate_from_index(AnnualSeries(2000, {100.0, 110.0}, Unit::index_level))[0] ==
          Approx(0.0953101798).epsilon(1e-9));
    CHECK(short_rate_from_index(AnnualSeries(2000, {100.0, 100.0 * std::exp(0.07)}, Unit::index_level))[0] ==
          Approx(0.07).epsilon(1e-12));
}

TEST_CASE("log spread") {
    CHECK(log_spread(AnnualSeries(2000, {0.10}), AnnualSeries(2000, {0.10}))[0] == 0.0);
    CHECK(log_spread(AnnualSeries(2000, {0.10}), AnnualSeries(2000, {0.085487}))[0] == Approx(0.1568).epsilon(1e-5));
    CHECK_THROWS_AS(log_spread(AnnualSeries(2000, {0.10}), AnnualSeries(2000, {0.0})), DataError);

    const auto s = log_spread(AnnualSeries(2000, {0.1, 0.1, 0.1}), AnnualSeries(2001, {0.1, 0.1, 0.1}));
    CHECK(s.start_year() == 2001);
    CHECK(s.size() == 2);
}

TEST_CASE("ILB averages") {
    CHECK(average_ilb_yield({AnnualSeries(2000, {0.02, 0.03})}).values() == Eigen::Vector2d(0.02, 0.03));
    CHECK(average_ilb_yield({AnnualSeries(2000, {0.02}), AnnualSeries(2000, {0.03})})[0] == Approx(0.025));
    CHECK(average_ilb_yield({AnnualSeries(2000, {0.02}), AnnualSeries(2000, {0.025}), AnnualSeries(2000, {0.03})})[0] ==
          Approx(0.025));
}

TEST_CASE("slicing and year lookup") {
    const AnnualSeries s(1960, {1.0, 2.0, 3.0, 4.0});
    CHECK(s.at_year(1962) == 3.0);
    CHECK_THROWS_AS(s.at_year(1970), DataError);
    const auto mid = s.slice(1961, 1962);
    CHECK(mid.start_year() == 1961);
    CHECK(mid.size() == 2);
    CHECK(s.slice(1900, 1961).size() == 2);
    CHECK_THROWS_AS(s.slice(1970, 1980), DataError);
}
