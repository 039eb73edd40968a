#pragma once

#include "fconn/types.hpp"

#include <chrono>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fconn {

// Calendar date, ISO-8601 on the wire.
class Date {
 public:
  Date() = default;
  explicit Date(std::chrono::year_month_day ymd);

  // Accepts YYYY-MM-DD; throws DomainError otherwise.
  static Date parse(std::string_view text);
  std::string iso() const;

  std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }
  auto operator<=>(const Date&) const = default;

 private:
  std::chrono::sys_days days_{};
};

struct OhlcBar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
};

// T x N panel of observations with row dates and column names.
struct Panel {
  Matrix values;
  std::vector<Date> dates;
  std::vector<std::string> names;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  // Throws DomainError when the dimension or ordering invariants do not hold.
  void validate() const;
};

struct RollingWindowSpec {
  int window_length = 150;
  int step = 1;
};

struct Window {
  Date end_date;
  Panel slice;
};

struct NamedSeries {
  std::string name;
  std::vector<std::pair<Date, double>> points;
};

enum class VolatilityTransform { Raw, Log };

// Range-based daily variance from log open/high/low/close prices. Negative
// values produced by extreme bars are clamped at zero.
double range_volatility(const OhlcBar& bar);

// Inner join on dates common to every series, columns in input order.
Panel assemble_panel(const std::vector<NamedSeries>& series);

std::vector<Window> rolling_windows(const Panel& panel, const RollingWindowSpec& spec);

// Number of windows rolling_windows would produce; throws on invalid spec.
std::size_t window_count(std::size_t rows, const RollingWindowSpec& spec);

Matrix demean_columns(const Matrix& x);

// Elementwise natural log for the Log transform; zero or negative entries are
// a DomainError naming the offending cell.
Panel apply_transform(Panel panel, VolatilityTransform transform);

enum class InputKind { Ohlc, Values };

// Long-form CSV: `date,name,open,high,low,close` or `date,name,value`. OHLC
// rows are converted with range_volatility. Series appear in order of first
// occurrence.
std::vector<NamedSeries> read_long_csv(std::istream& in, InputKind kind);
std::vector<NamedSeries> read_long_csv_file(const std::string& path, InputKind kind);

// Wide CSV with a leading `date` column.
void write_wide_csv(std::ostream& out, const Panel& panel);
Panel read_wide_csv(std::istream& in);

}  // namespace fconn
