#include "saesg/series.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace saesg {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n\"");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n\"");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_number(const std::string& text, const std::filesystem::path& path, std::size_t row,
                    const std::string& column) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (text.empty() || used != text.size() || !std::isfinite(value)) {
        throw DataError(path.string() + ": row " + std::to_string(row) + ": non-numeric " + column +
                        " '" + text + "'");
    }
    return value;
}

void check_positive(const AnnualSeries& s, const char* what) {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (!(s[i] > 0.0)) {
            throw DataError(std::string(what) + ": non-positive value " + std::to_string(s[i]) +
                            " in year " + std::to_string(s.start_year() + static_cast<int>(i)));
        }
    }
}

AnnualSeries log_difference(const AnnualSeries& level, const char* what) {
    if (level.size() < 2) throw DataError(std::string(what) + ": series needs at least 2 values");
    check_positive(level, what);
    const Eigen::Index n = level.size();
    // std::log per element: Eigen's packet log can differ from the scalar tail by an ulp.
    const Eigen::ArrayXd logs = level.values().array().unaryExpr([](double v) { return std::log(v); });
    Eigen::VectorXd out = logs.tail(n - 1) - logs.head(n - 1);
    return AnnualSeries(level.start_year() + 1, std::move(out), Unit::rate_decimal);
}

}  // namespace

std::string to_string(Unit unit) {
    switch (unit) {
        case Unit::index_level: return "index_level";
        case Unit::rate_decimal: return "rate_decimal";
        case Unit::rate_percent: return "rate_percent";
        case Unit::log_value: return "log_value";
    }
    return "unknown";
}

Unit unit_from_string(const std::string& name) {
    if (name == "index_level") return Unit::index_level;
    if (name == "rate_decimal") return Unit::rate_decimal;
    if (name == "rate_percent") return Unit::rate_percent;
    if (name == "log_value") return Unit::log_value;
    throw DataError("unknown unit '" + name + "'");
}

AnnualSeries::AnnualSeries(int start_year, Eigen::VectorXd values, Unit unit)
    : start_year_(start_year), values_(std::move(values)), unit_(unit) {}

AnnualSeries::AnnualSeries(int start_year, std::initializer_list<double> values, Unit unit)
    : start_year_(start_year), values_(static_cast<Eigen::Index>(values.size())), unit_(unit) {
    Eigen::Index i = 0;
    for (double v : values) values_(i++) = v;
}

double AnnualSeries::at_year(int year) const {
    if (!contains(year)) {
        throw DataError("year " + std::to_string(year) + " outside series range " +
                        std::to_string(start_year_) + "-" + std::to_string(end_year()));
    }
    return values_(year - start_year_);
}

AnnualSeries AnnualSeries::slice(int from, int to) const {
    const int lo = std::max(from, start_year_);
    const int hi = std::min(to, end_year());
    if (empty() || lo > hi) {
        throw DataError("slice " + std::to_string(from) + "-" + std::to_string(to) +
                        " does not overlap the series");
    }
    return AnnualSeries(lo, values_.segment(lo - start_year_, hi - lo + 1), unit_);
}

AnnualSeries AnnualSeries::to_decimal() const {
    if (unit_ != Unit::rate_percent) return *this;
    return AnnualSeries(start_year_, values_ / 100.0, Unit::rate_decimal);
}

std::map<std::string, AnnualSeries> load_multi_series(const std::filesystem::path& path, Unit unit,
                                                      const ColumnMap& columns) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open file");

    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    const auto header = split_csv_line(line);
    auto find_column = [&](const std::string& name) -> std::ptrdiff_t {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : std::distance(header.begin(), it);
    };
    const auto year_col = find_column(columns.year);
    const auto value_col = find_column(columns.value);
    const auto series_col = find_column(columns.series);
    if (year_col < 0) throw DataError(path.string() + ": missing column '" + columns.year + "'");
    if (value_col < 0) throw DataError(path.string() + ": missing column '" + columns.value + "'");

    struct Pending {
        int start = 0;
        int last = 0;
        std::vector<double> values;
    };
    std::map<std::string, Pending> pending;

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        const auto needed = static_cast<std::size_t>(std::max({year_col, value_col, series_col})) + 1;
        if (fields.size() < needed) {
            throw DataError(path.string() + ": row " + std::to_string(row) + ": too few columns");
        }
        const double year_value = parse_number(fields[year_col], path, row, columns.year);
        if (year_value != std::floor(year_value)) {
            throw DataError(path.string() + ": row " + std::to_string(row) + ": non-integer year");
        }
        const int year = static_cast<int>(year_value);
        const double value = parse_number(fields[value_col], path, row, columns.value);
        const std::string label = series_col >= 0 ? fields[series_col] : std::string();

        auto [it, inserted] = pending.try_emplace(label);
        Pending& p = it->second;
        if (inserted) {
            p.start = year;
        } else if (year == p.last) {
            throw DataError(path.string() + ": row " + std::to_string(row) + ": duplicate year " +
                            std::to_string(year));
        } else if (year < p.last) {
            throw DataError(path.string() + ": row " + std::to_string(row) + ": year " +
                            std::to_string(year) + " out of order");
        } else if (year != p.last + 1) {
            throw DataError(path.string() + ": row " + std::to_string(row) + ": year gap, missing " +
                            std::to_string(p.last + 1));
        }
        p.last = year;
        p.values.push_back(value);
    }
    if (pending.empty()) throw DataError(path.string() + ": no data rows");

    std::map<std::string, AnnualSeries> out;
    for (auto& [label, p] : pending) {
        AnnualSeries s(p.start, Eigen::Map<Eigen::VectorXd>(p.values.data(), static_cast<Eigen::Index>(p.values.size())),
                       unit);
        if (unit == Unit::index_level) check_positive(s, path.string().c_str());
        out.emplace(label, s.to_decimal());
    }
    return out;
}

AnnualSeries load_series(const std::filesystem::path& path, Unit unit, const ColumnMap& columns) {
    auto all = load_multi_series(path, unit, columns);
    if (all.size() != 1) {
        throw DataError(path.string() + ": expected one series, found " + std::to_string(all.size()));
    }
    return all.begin()->second;
}

AnnualSeries force_of_inflation(const AnnualSeries& cpi) {
    return log_difference(cpi, "force_of_inflation");
}

AnnualSeries log_growth(const AnnualSeries& dividends) {
    return log_difference(dividends, "log_growth");
}

AnnualSeries short_rate_from_index(const AnnualSeries& index) {
    return log_difference(index, "short_rate_from_index");
}

std::pair<int, int> common_years(std::initializer_list<const AnnualSeries*> series) {
    int lo = std::numeric_limits<int>::min();
    int hi = std::numeric_limits<int>::max();
    for (const AnnualSeries* s : series) {
        if (s->empty()) throw DataError("empty series");
        lo = std::max(lo, s->start_year());
        hi = std::min(hi, s->end_year());
    }
    if (lo > hi) throw DataError("series do not share any year");
    return {lo, hi};
}

AnnualSeries derive_dividends(const AnnualSeries& price, const AnnualSeries& yield) {
    if (price.start_year() != yield.start_year() || price.size() != yield.size()) {
        throw DataError("derive_dividends: price and yield years are misaligned");
    }
    const AnnualSeries y = yield.to_decimal();
    if ((y.values().array() < 0.0).any()) throw DataError("derive_dividends: negative yield");
    return AnnualSeries(price.start_year(), price.values().cwiseProduct(y.values()), Unit::index_level);
}

AnnualSeries log_spread(const AnnualSeries& long_rate, const AnnualSeries& short_rate) {
    const auto [lo, hi] = common_years({&long_rate, &short_rate});
    const AnnualSeries c = long_rate.to_decimal().slice(lo, hi);
    const AnnualSeries b = short_rate.to_decimal().slice(lo, hi);
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        if (!(c[i] > 0.0) || !(b[i] > 0.0)) {
            throw DataError("log_spread: non-positive rate in year " + std::to_string(lo + static_cast<int>(i)));
        }
    }
    Eigen::VectorXd bd = (c.values().array() / b.values().array()).unaryExpr([](double v) { return std::log(v); });
    return AnnualSeries(lo, std::move(bd), Unit::log_value);
}

AnnualSeries average_ilb_yield(const std::vector<AnnualSeries>& per_maturity) {
    if (per_maturity.empty()) throw DataError("average_ilb_yield: no series");
    int lo = std::numeric_limits<int>::max();
    int hi = std::numeric_limits<int>::min();
    for (const auto& s : per_maturity) {
        if (s.empty()) continue;
        lo = std::min(lo, s.start_year());
        hi = std::max(hi, s.end_year());
    }
    if (lo > hi) throw DataError("average_ilb_yield: all series empty");

    Eigen::VectorXd out(hi - lo + 1);
    for (int year = lo; year <= hi; ++year) {
        double sum = 0.0;
        int count = 0;
        for (const auto& s : per_maturity) {
            if (s.contains(year)) {
                sum += s.to_decimal().at_year(year);
                ++count;
            }
        }
        if (count == 0) throw DataError("average_ilb_yield: no bond quoted in " + std::to_string(year));
        out(year - lo) = sum / count;
    }
    return AnnualSeries(lo, std::move(out), Unit::rate_decimal);
}

}  // namespace saesg
