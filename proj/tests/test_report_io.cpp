#include <cstring>
#include <sstream>

#include <doctest.h>

#include "reference_params.hpp"
#include "saesg/report_io.hpp"
#include "test_util.hpp"

using namespace saesg;

namespace {

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

}  // namespace

TEST_CASE("doubles survive a text round trip") {
    for (double v : {0.1, 1.0 / 3.0, -4.0074, 1e-300, 6.02214076e23, 0.8433}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("parameter JSON round trip is exact") {
    ModelSpec spec = reference::dividend_yield().spec;
    spec.ma_init = 0.0731;
    ParamSet p = ParamSet::from_values(spec, {{"w_y", -4.0074 / 3.0}, {"d_y", 0.1396}, {"mu_y", 0.3781},
                                              {"a_y", 0.6318}, {"sigma_y", 0.1973}});
    const auto back = submodel_from_json(json::parse(to_json(spec, p).dump()));
    CHECK(back.spec.variant == spec.variant);
    CHECK(back.spec.yield_unit == Unit::rate_percent);
    REQUIRE(back.spec.ma_init.has_value());
    CHECK(*back.spec.ma_init == 0.0731);
    for (const auto& q : p.parameters()) CHECK(back.params.get(q.name) == q.value);

    CHECK_THROWS(submodel_from_json(json{{"series", "inflation"}, {"variant", "ar1"},
                                         {"parameters", json::array({{{"name", "mu_q"}, {"value", 0.1}}})}}));
}

TEST_CASE("fixed parameters are labelled, not given an SE") {
    ModelSpec spec = reference::long_rate().spec;
    spec.fixed["w_c"] = 1.0;
    ParamSet p = ParamSet::from_values(spec, reference::long_rate().value);
    const json j = to_json(spec, p);
    bool seen = false;
    for (const auto& e : j.at("parameters")) {
        if (e.at("name") == "w_c") {
            CHECK(e.at("std_error") == "fixed parameter");
            CHECK(e.at("fixed") == true);
            seen = true;
        }
    }
    CHECK(seen);
    const auto back = submodel_from_json(j);
    CHECK(back.params.at("w_c").fixed);
    CHECK(back.spec.fixed.at("w_c") == 1.0);
}

TEST_CASE("binary scenarios round trip") {
    const auto m = reference::cascade(true);
    SimulationOptions o;
    o.n_paths = 37;
    o.horizon = 4;
    o.seed = 99;
    const auto s = simulate(m, neutral_state(m), o);
    std::stringstream buf;
    write_scenarios_binary(buf, s);
    const std::string bytes = buf.str();
    CHECK(bytes.substr(0, 6) == "SAESG1");
    const auto back = read_scenarios_binary(buf);
    CHECK(back.seed == 99);
    CHECK(back.n_paths == 37);
    CHECK(back.horizon == 4);
    REQUIRE(back.series.size() == s.series.size());
    for (const auto& [name, mat] : s.series) {
        CHECK(std::memcmp(mat.data(), back.series.at(name).data(), sizeof(double) * mat.size()) == 0);
    }

    std::stringstream junk("NOTSAESG");
    CHECK_THROWS(read_scenarios_binary(junk));
}

TEST_CASE("CSV headers") {
    ScenarioSet s;
    s.n_paths = 1000;
    s.horizon = 3;
    s.start_year = 2019;
    s.series["inflation"] = PathMatrix::Constant(1000, 3, 0.05);
    std::ostringstream fan_csv;
    write_fan_csv(fan_csv, fan(s));
    CHECK(first_line(fan_csv.str()) == "year,series,q005,q025,q50,q975,q995,mean");
    CHECK(fan_csv.str().find("2021,inflation,") != std::string::npos);

    std::ostringstream long_csv;
    write_scenarios_csv(long_csv, s);
    CHECK(first_line(long_csv.str()) == "path,year,series,value");

    DataBundle data;
    data.inflation = AnnualSeries(1960, testutil::ar1_path(40, 0.08, 0.7, 0.02, 5));
    const auto table = recursive_fit(reference::inflation().spec, data, StabilityDirection::expanding_end, 35);
    std::ostringstream stab;
    write_stability_csv(stab, table);
    const std::string header = first_line(stab.str());
    CHECK(header.rfind("period_bound_year,mu_q_estimate,mu_q_se,mu_q_ci_low,mu_q_ci_high", 0) == 0);
    const std::string text = stab.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + static_cast<long>(table.rows.size()));
}

TEST_CASE("fit table shows fixed parameters") {
    ModelSpec spec = reference::inflation().spec;
    spec.fixed["mu_q"] = 0.07;
    DataBundle data;
    data.inflation = AnnualSeries(1960, testutil::ar1_path(60, 0.08, 0.7, 0.02, 5));
    const auto f = fit(spec, data);
    const std::string table = format_fit_table({f});
    CHECK(table.find("(fixed parameter)") != std::string::npos);
    CHECK(table.find("a_q") != std::string::npos);
}
