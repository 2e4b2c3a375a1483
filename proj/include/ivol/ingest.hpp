#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ivol {

inline constexpr int kDefaultBinsPerDay = 78;

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;

  /// YYYY-MM-DD
  std::string iso() const;
};

/// Parses `text` against a strftime-like `format` supporting %Y, %m and %d.
/// Month and day may be written with or without a leading zero.
/// Throws DomainError on mismatch or an invalid calendar date.
Date parse_date(std::string_view text, std::string_view format);
std::string format_date(const Date& date, std::string_view format);

/// One 5-minute bar of a trading day.
struct Bar {
  Date date;
  int bin_index = 0;
  double last = 0.0;
  double first = 0.0;
  double high = 0.0;
  double low = 0.0;
  std::int64_t volume = 0;
  double vwap = 0.0;
  std::string time_bin;  // clock label, e.g. "14:30"
};

struct TradingDay {
  Date date;
  std::vector<Bar> bars;  // exactly bins_per_day, ordered by bin_index
};

struct BarSeries {
  std::string symbol;
  int bins_per_day = kDefaultBinsPerDay;
  std::vector<TradingDay> days;  // strictly increasing dates
};

/// Column names and formatting of a raw bar file.
struct SchemaConfig {
  std::string date_column = "Time";
  std::string last_column = "LAST";
  std::string first_column = "FIRST";
  std::string high_column = "HIGH";
  std::string low_column = "LOW";
  std::string volume_column = "VOLUME";
  std::string vwap_column = "VWAP";
  std::string time_bin_column = "time bin";
  char delimiter = ',';
  std::string date_format = "%m/%d/%Y";
  int bins_per_day = kDefaultBinsPerDay;
};

/// Intraday percentage panel of one instrument: rows are days, columns bins.
struct Panel {
  std::string symbol;
  std::vector<Date> dates;
  Eigen::MatrixXd values;         // p_{t,i}, each row sums to 100
  Eigen::MatrixXd dollar_volume;  // volume * vwap

  Eigen::Index days() const { return values.rows(); }
  Eigen::Index bins() const { return values.cols(); }

  /// Rows [begin, end).
  Panel slice(Eigen::Index begin, Eigen::Index end) const;
};

/// Reads a delimiter-separated bar file with a header row.
/// Throws ParseError, IncompleteDayError or DuplicateBinError.
BarSeries parse_bars(std::istream& in, const SchemaConfig& schema, std::string symbol = {});

/// Writes bars in the column layout of `schema`; parse_bars reads it back exactly.
void write_bars(std::ostream& out, const BarSeries& series, const SchemaConfig& schema);

double dollar_volume(const Bar& bar);

/// Percentage panel of a bar series. Throws ZeroDayError for a day without volume.
Panel build_panel(const BarSeries& series);

/// Splits into rows [0, t_train) and [t_train, T). Throws BoundsError unless 0 < t_train < T.
std::pair<Panel, Panel> train_test_split(const Panel& panel, Eigen::Index t_train);

/// Panel file: one row per (day, bin) with symbol,date,bin_index,dollar_volume,percentage.
void write_panel(std::ostream& out, const Panel& panel);
Panel read_panel(std::istream& in);

/// Throws DomainError if any row deviates from 100 by more than `tol` or has a negative entry.
void check_row_normalization(const Eigen::MatrixXd& rows, double tol = 1e-9);

}  // namespace ivol
