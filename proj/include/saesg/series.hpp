#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace saesg {

/// Thrown for malformed or inconsistent input data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Unit { index_level, rate_decimal, rate_percent, log_value };

std::string to_string(Unit unit);
Unit unit_from_string(const std::string& name);

/*
 * A gap-free sequence of annual observations. values(i) belongs to calendar
 * year start_year + i.
 */
class AnnualSeries {
public:
    AnnualSeries() = default;
    AnnualSeries(int start_year, Eigen::VectorXd values, Unit unit = Unit::rate_decimal);
    AnnualSeries(int start_year, std::initializer_list<double> values,
                 Unit unit = Unit::rate_decimal);

    int start_year() const { return start_year_; }
    int end_year() const { return start_year_ + static_cast<int>(values_.size()) - 1; }
    Eigen::Index size() const { return values_.size(); }
    bool empty() const { return values_.size() == 0; }
    Unit unit() const { return unit_; }

    const Eigen::VectorXd& values() const { return values_; }
    double operator[](Eigen::Index i) const { return values_(i); }

    bool contains(int year) const { return !empty() && year >= start_year_ && year <= end_year(); }
    double at_year(int year) const;

    /// Sub-series over [from, to] intersected with the available years.
    /// Throws if the intersection is empty.
    AnnualSeries slice(int from, int to) const;

    /// Percent rates become decimal; everything else is returned unchanged.
    AnnualSeries to_decimal() const;

private:
    int start_year_ = 0;
    Eigen::VectorXd values_;
    Unit unit_ = Unit::rate_decimal;
};

/// Column names used when reading a CSV file.
struct ColumnMap {
    std::string year = "year";
    std::string value = "value";
    std::string series = "series";
};

/// Reads a single-series CSV file with a header row.
AnnualSeries load_series(const std::filesystem::path& path, Unit unit,
                         const ColumnMap& columns = {});

/// Reads a CSV whose optional `series` column splits the rows into several
/// series (one per distinct label, each contiguous). Files without the
/// column yield one series labelled "".
std::map<std::string, AnnualSeries> load_multi_series(const std::filesystem::path& path, Unit unit,
                                                      const ColumnMap& columns = {});

/// ln Q(t) - ln Q(t-1).
AnnualSeries force_of_inflation(const AnnualSeries& cpi);

/// D(t) = P(t) * Y(t), with Y converted to decimal first.
AnnualSeries derive_dividends(const AnnualSeries& price, const AnnualSeries& yield);

/// ln D(t) - ln D(t-1).
AnnualSeries log_growth(const AnnualSeries& dividends);

/// ln(G(t)/G(t-1)) for a money-market total-return index.
AnnualSeries short_rate_from_index(const AnnualSeries& index);

/// bd(t) = ln(delta_c(t) / delta_b(t)) over the common years.
AnnualSeries log_spread(const AnnualSeries& long_rate, const AnnualSeries& short_rate);

/// Per-year mean over whichever maturities are quoted in that year.
AnnualSeries average_ilb_yield(const std::vector<AnnualSeries>& per_maturity);

/// Common year range of several series; throws DataError if they do not overlap.
std::pair<int, int> common_years(std::initializer_list<const AnnualSeries*> series);

}  // namespace saesg
