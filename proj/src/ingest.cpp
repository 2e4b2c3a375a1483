#include "ivol/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "ivol/errors.hpp"
#include "ivol/text.hpp"

namespace ivol {
namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr std::array<int, 12> kDays{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[static_cast<std::size_t>(m - 1)];
}

std::string pad(int value, int width) {
  std::string s = std::to_string(value);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

// Minutes since midnight of an "HH:MM" label.
std::optional<int> clock_minutes(std::string_view label) {
  label = text::trim(label);
  const auto colon = label.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const auto h = text::parse_int(label.substr(0, colon));
  const auto m = text::parse_int(label.substr(colon + 1));
  if (!h || !m || *h < 0 || *h > 23 || *m < 0 || *m > 59) return std::nullopt;
  return static_cast<int>(*h * 60 + *m);
}

struct PendingBar {
  int minutes;
  std::size_t line;
  Bar bar;
};

}  // namespace

std::string Date::iso() const { return pad(year, 4) + "-" + pad(month, 2) + "-" + pad(day, 2); }

Date parse_date(std::string_view text, std::string_view format) {
  text = text::trim(text);
  Date d{};
  bool have_y = false, have_m = false, have_d = false;
  std::size_t pos = 0;
  auto fail = [&]() -> Date {
    throw DomainError("date '" + std::string(text) + "' does not match format '" + std::string(format) + "'");
  };
  auto read_number = [&](std::size_t max_digits) -> int {
    std::size_t start = pos;
    while (pos < text.size() && pos - start < max_digits && text[pos] >= '0' && text[pos] <= '9') ++pos;
    if (pos == start) fail();
    return std::stoi(std::string(text.substr(start, pos - start)));
  };
  for (std::size_t f = 0; f < format.size(); ++f) {
    if (format[f] == '%' && f + 1 < format.size()) {
      char spec = format[++f];
      if (spec == '-' && f + 1 < format.size()) spec = format[++f];
      switch (spec) {
        case 'Y': d.year = read_number(4); have_y = true; break;
        case 'm': d.month = read_number(2); have_m = true; break;
        case 'd': d.day = read_number(2); have_d = true; break;
        default: throw DomainError("unsupported date directive %" + std::string(1, spec));
      }
    } else {
      if (pos >= text.size() || text[pos] != format[f]) fail();
      ++pos;
    }
  }
  if (pos != text.size() || !have_y || !have_m || !have_d) fail();
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month)) fail();
  return d;
}

std::string format_date(const Date& date, std::string_view format) {
  std::string out;
  for (std::size_t f = 0; f < format.size(); ++f) {
    if (format[f] == '%' && f + 1 < format.size()) {
      char spec = format[++f];
      bool padded = true;
      if (spec == '-' && f + 1 < format.size()) {
        padded = false;
        spec = format[++f];
      }
      switch (spec) {
        case 'Y': out += pad(date.year, 4); break;
        case 'm': out += padded ? pad(date.month, 2) : std::to_string(date.month); break;
        case 'd': out += padded ? pad(date.day, 2) : std::to_string(date.day); break;
        default: throw DomainError("unsupported date directive %" + std::string(1, spec));
      }
    } else {
      out += format[f];
    }
  }
  return out;
}

Panel Panel::slice(Eigen::Index begin, Eigen::Index end) const {
  Panel out;
  out.symbol = symbol;
  out.dates.assign(dates.begin() + begin, dates.begin() + end);
  out.values = values.middleRows(begin, end - begin);
  out.dollar_volume = dollar_volume.middleRows(begin, end - begin);
  return out;
}

BarSeries parse_bars(std::istream& in, const SchemaConfig& schema, std::string symbol) {
  if (schema.bins_per_day < 1) throw DomainError("bins_per_day must be positive");
  BarSeries series;
  series.symbol = std::move(symbol);
  series.bins_per_day = schema.bins_per_day;

  std::string line;
  std::size_t line_no = 0;
  // Skip leading blank lines; an empty stream is an empty series.
  while (std::getline(in, line)) {
    ++line_no;
    if (!text::trim(line).empty()) break;
  }
  if (text::trim(line).empty()) return series;

  const auto header = text::split(line, schema.delimiter);
  auto column = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (text::trim(header[i]) == name) return i;
    }
    throw ParseError(line_no, "missing column '" + name + "'");
  };
  const std::size_t c_date = column(schema.date_column);
  const std::size_t c_last = column(schema.last_column);
  const std::size_t c_first = column(schema.first_column);
  const std::size_t c_high = column(schema.high_column);
  const std::size_t c_low = column(schema.low_column);
  const std::size_t c_volume = column(schema.volume_column);
  const std::size_t c_vwap = column(schema.vwap_column);
  const std::size_t c_bin = column(schema.time_bin_column);

  std::map<Date, std::vector<PendingBar>> by_date;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, schema.delimiter);
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    auto number = [&](std::size_t c, const char* name) {
      const auto v = text::parse_double(fields[c]);
      if (!v || !std::isfinite(*v)) throw ParseError(line_no, std::string("unparsable ") + name);
      return *v;
    };
    Bar bar;
    try {
      bar.date = parse_date(fields[c_date], schema.date_format);
    } catch (const DomainError& e) {
      throw ParseError(line_no, e.what());
    }
    bar.last = number(c_last, "LAST");
    bar.first = number(c_first, "FIRST");
    bar.high = number(c_high, "HIGH");
    bar.low = number(c_low, "LOW");
    bar.vwap = number(c_vwap, "VWAP");
    const auto volume = text::parse_int(fields[c_volume]);
    if (!volume) throw ParseError(line_no, "unparsable VOLUME");
    bar.volume = *volume;
    bar.time_bin = std::string(text::trim(fields[c_bin]));
    const auto minutes = clock_minutes(bar.time_bin);
    if (!minutes) throw ParseError(line_no, "unparsable time bin '" + bar.time_bin + "'");

    if (bar.volume < 0) throw ParseError(line_no, "negative volume");
    if (bar.volume > 0 && !(bar.vwap > 0.0)) throw ParseError(line_no, "non-positive VWAP with traded volume");
    if (!(bar.low <= std::min(bar.first, bar.last) && std::max(bar.first, bar.last) <= bar.high)) {
      throw ParseError(line_no, "price range violates LOW <= FIRST,LAST <= HIGH");
    }

    auto& day = by_date[bar.date];
    for (const auto& other : day) {
      if (other.minutes == *minutes) throw DuplicateBinError(line_no, bar.date.iso(), bar.time_bin);
    }
    day.push_back({*minutes, line_no, std::move(bar)});
  }

  for (auto& [date, pending] : by_date) {
    if (static_cast<int>(pending.size()) != schema.bins_per_day) {
      throw IncompleteDayError(date.iso(), pending.size(), static_cast<std::size_t>(schema.bins_per_day));
    }
    std::sort(pending.begin(), pending.end(),
              [](const PendingBar& a, const PendingBar& b) { return a.minutes < b.minutes; });
    TradingDay day{date, {}};
    day.bars.reserve(pending.size());
    for (std::size_t i = 0; i < pending.size(); ++i) {
      pending[i].bar.bin_index = static_cast<int>(i);
      day.bars.push_back(std::move(pending[i].bar));
    }
    series.days.push_back(std::move(day));
  }
  return series;
}

void write_bars(std::ostream& out, const BarSeries& series, const SchemaConfig& schema) {
  const char d = schema.delimiter;
  out << schema.date_column << d << schema.last_column << d << schema.first_column << d
      << schema.high_column << d << schema.low_column << d << schema.volume_column << d
      << schema.vwap_column << d << schema.time_bin_column << '\n';
  for (const auto& day : series.days) {
    const std::string date = format_date(day.date, schema.date_format);
    for (const auto& bar : day.bars) {
      out << date << d << text::format_double(bar.last) << d << text::format_double(bar.first) << d
          << text::format_double(bar.high) << d << text::format_double(bar.low) << d << bar.volume << d
          << text::format_double(bar.vwap) << d << bar.time_bin << '\n';
    }
  }
}

double dollar_volume(const Bar& bar) { return static_cast<double>(bar.volume) * bar.vwap; }

Panel build_panel(const BarSeries& series) {
  const auto days = static_cast<Eigen::Index>(series.days.size());
  const Eigen::Index bins = series.bins_per_day;
  Panel panel;
  panel.symbol = series.symbol;
  panel.values.resize(days, bins);
  panel.dollar_volume.resize(days, bins);
  panel.dates.reserve(series.days.size());
  for (Eigen::Index t = 0; t < days; ++t) {
    const auto& day = series.days[static_cast<std::size_t>(t)];
    if (static_cast<Eigen::Index>(day.bars.size()) != bins) {
      throw IncompleteDayError(day.date.iso(), day.bars.size(), static_cast<std::size_t>(bins));
    }
    panel.dates.push_back(day.date);
    for (Eigen::Index i = 0; i < bins; ++i) {
      panel.dollar_volume(t, i) = dollar_volume(day.bars[static_cast<std::size_t>(i)]);
    }
    const double total = panel.dollar_volume.row(t).sum();
    if (!(total > 0.0)) throw ZeroDayError(day.date.iso());
    panel.values.row(t) = panel.dollar_volume.row(t) * (100.0 / total);
  }
  return panel;
}

std::pair<Panel, Panel> train_test_split(const Panel& panel, Eigen::Index t_train) {
  if (t_train <= 0 || t_train >= panel.days()) {
    throw BoundsError("t_train=" + std::to_string(t_train) + " outside (0, " + std::to_string(panel.days()) + ")");
  }
  return {panel.slice(0, t_train), panel.slice(t_train, panel.days())};
}

void write_panel(std::ostream& out, const Panel& panel) {
  out << "symbol,date,bin_index,dollar_volume,percentage\n";
  for (Eigen::Index t = 0; t < panel.days(); ++t) {
    const std::string date = panel.dates[static_cast<std::size_t>(t)].iso();
    for (Eigen::Index i = 0; i < panel.bins(); ++i) {
      out << panel.symbol << ',' << date << ',' << i << ',' << text::format_double(panel.dollar_volume(t, i))
          << ',' << text::format_double(panel.values(t, i)) << '\n';
    }
  }
}

Panel read_panel(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty panel file");
  ++line_no;
  if (text::trim(line) != "symbol,date,bin_index,dollar_volume,percentage") {
    throw ParseError(line_no, "unexpected panel header");
  }
  Panel panel;
  std::vector<std::vector<std::pair<double, double>>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 5) throw ParseError(line_no, "expected 5 fields");
    if (panel.symbol.empty() && rows.empty()) panel.symbol = std::string(f[0]);
    Date date;
    try {
      date = parse_date(f[1], "%Y-%m-%d");
    } catch (const DomainError& e) {
      throw ParseError(line_no, e.what());
    }
    const auto bin = text::parse_int(f[2]);
    const auto dv = text::parse_double(f[3]);
    const auto pct = text::parse_double(f[4]);
    if (!bin || !dv || !pct) throw ParseError(line_no, "unparsable panel value");
    if (*bin == 0) {
      if (!panel.dates.empty() && !(panel.dates.back() < date)) throw ParseError(line_no, "dates not increasing");
      panel.dates.push_back(date);
      rows.emplace_back();
    }
    if (rows.empty() || panel.dates.back() != date || *bin != static_cast<std::int64_t>(rows.back().size())) {
      throw ParseError(line_no, "bins out of order");
    }
    rows.back().emplace_back(*dv, *pct);
  }
  if (rows.empty()) return panel;
  const auto bins = static_cast<Eigen::Index>(rows.front().size());
  panel.values.resize(static_cast<Eigen::Index>(rows.size()), bins);
  panel.dollar_volume.resize(panel.values.rows(), bins);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (static_cast<Eigen::Index>(rows[t].size()) != bins) {
      throw IncompleteDayError(panel.dates[t].iso(), rows[t].size(), static_cast<std::size_t>(bins));
    }
    for (Eigen::Index i = 0; i < bins; ++i) {
      panel.dollar_volume(static_cast<Eigen::Index>(t), i) = rows[t][static_cast<std::size_t>(i)].first;
      panel.values(static_cast<Eigen::Index>(t), i) = rows[t][static_cast<std::size_t>(i)].second;
    }
  }
  return panel;
}

void check_row_normalization(const Eigen::MatrixXd& rows, double tol) {
  for (Eigen::Index t = 0; t < rows.rows(); ++t) {
    const double s = rows.row(t).sum();
    if (!(std::abs(s - 100.0) < tol)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "row " << t << " sums to " << s;
      throw DomainError(msg.str());
    }
    if (rows.row(t).minCoeff() < 0.0) throw DomainError("row " + std::to_string(t) + " has a negative entry");
  }
}

}  // namespace ivol
