#include "fconn/ingest.hpp"

#include "fconn/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace fconn {

namespace {

int parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw DomainError("bad integer '" + std::string(s) + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DomainError("cannot parse number '" + s + "' (" + context + ")");
  }
}

}  // namespace

Date::Date(std::chrono::year_month_day ymd) : days_(ymd) {}

Date Date::parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw DomainError("date '" + std::string(text) + "' is not YYYY-MM-DD");
  }
  std::chrono::year_month_day ymd{std::chrono::year{parse_int(text.substr(0, 4))},
                                  std::chrono::month{static_cast<unsigned>(parse_int(text.substr(5, 2)))},
                                  std::chrono::day{static_cast<unsigned>(parse_int(text.substr(8, 2)))}};
  if (!ymd.ok()) throw DomainError("invalid calendar date '" + std::string(text) + "'");
  return Date(ymd);
}

std::string Date::iso() const {
  const auto ymd = this->ymd();
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

void Panel::validate() const {
  if (values.rows() < 1 || values.cols() < 1) throw DomainError("panel must have T >= 1 and N >= 1");
  if (static_cast<Eigen::Index>(dates.size()) != values.rows()) throw DomainError("panel dates/rows mismatch");
  if (static_cast<Eigen::Index>(names.size()) != values.cols()) throw DomainError("panel names/columns mismatch");
  for (std::size_t t = 1; t < dates.size(); ++t) {
    if (!(dates[t - 1] < dates[t])) throw DomainError("panel dates not strictly increasing at " + dates[t].iso());
  }
  if (!values.allFinite()) throw DomainError("panel contains non-finite values");
}

double range_volatility(const OhlcBar& bar) {
  if (!(bar.open > 0.0) || !(bar.high > 0.0) || !(bar.low > 0.0) || !(bar.close > 0.0)) {
    throw DomainError("non-positive price on " + bar.date.iso());
  }
  if (bar.high < std::max(bar.open, bar.close) || bar.low > std::min(bar.open, bar.close)) {
    throw DomainError("inconsistent OHLC bar on " + bar.date.iso());
  }
  // Work with logs relative to the open so the result is scale invariant
  // bit-for-bit rather than only up to rounding of log(price).
  const double h = std::log(bar.high / bar.open);
  const double l = std::log(bar.low / bar.open);
  const double c = std::log(bar.close / bar.open);
  const double var = 0.511 * (h - l) * (h - l) - 0.019 * (c * (h + l) - 2.0 * h * l) - 0.383 * c * c;
  return std::max(var, 0.0);
}

Panel assemble_panel(const std::vector<NamedSeries>& series) {
  if (series.empty()) throw EstimationError("no series to assemble");
  std::vector<std::map<Date, double>> lookup(series.size());
  for (std::size_t s = 0; s < series.size(); ++s) {
    if (series[s].points.empty()) throw EstimationError("series '" + series[s].name + "' is empty");
    for (const auto& [date, value] : series[s].points) {
      if (!lookup[s].emplace(date, value).second) {
        throw EstimationError("series '" + series[s].name + "' has duplicate date " + date.iso());
      }
    }
  }
  std::vector<Date> common;
  for (const auto& [date, value] : lookup[0]) {
    bool everywhere = true;
    for (std::size_t s = 1; s < lookup.size() && everywhere; ++s) everywhere = lookup[s].count(date) > 0;
    if (everywhere) common.push_back(date);
  }
  if (common.empty()) {
    std::ostringstream msg;
    msg << "no date common to all series;";
    for (std::size_t s = 0; s < series.size(); ++s) {
      msg << " " << series[s].name << "=[" << lookup[s].begin()->first.iso() << ".." << lookup[s].rbegin()->first.iso()
          << "]";
    }
    throw EstimationError(msg.str());
  }

  Panel panel;
  panel.dates = common;
  panel.values.resize(static_cast<Eigen::Index>(common.size()), static_cast<Eigen::Index>(series.size()));
  for (std::size_t s = 0; s < series.size(); ++s) {
    panel.names.push_back(series[s].name);
    for (std::size_t t = 0; t < common.size(); ++t) {
      panel.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) = lookup[s].at(common[t]);
    }
  }
  return panel;
}

std::size_t window_count(std::size_t rows, const RollingWindowSpec& spec) {
  if (spec.window_length < 1) throw DomainError("window_length must be positive");
  if (spec.step < 1) throw DomainError("step must be positive");
  if (static_cast<std::size_t>(spec.window_length) > rows) {
    throw DomainError("window_length " + std::to_string(spec.window_length) + " exceeds panel length " +
                      std::to_string(rows));
  }
  return (rows - static_cast<std::size_t>(spec.window_length)) / static_cast<std::size_t>(spec.step) + 1;
}

std::vector<Window> rolling_windows(const Panel& panel, const RollingWindowSpec& spec) {
  const std::size_t count = window_count(static_cast<std::size_t>(panel.rows()), spec);
  std::vector<Window> windows;
  windows.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const Eigen::Index start = static_cast<Eigen::Index>(w) * spec.step;
    Window win;
    win.slice.values = panel.values.middleRows(start, spec.window_length);
    win.slice.dates.assign(panel.dates.begin() + start, panel.dates.begin() + start + spec.window_length);
    win.slice.names = panel.names;
    win.end_date = win.slice.dates.back();
    windows.push_back(std::move(win));
  }
  return windows;
}

Matrix demean_columns(const Matrix& x) { return x.rowwise() - x.colwise().mean(); }

Panel apply_transform(Panel panel, VolatilityTransform transform) {
  if (transform == VolatilityTransform::Raw) return panel;
  for (Eigen::Index j = 0; j < panel.cols(); ++j) {
    for (Eigen::Index t = 0; t < panel.rows(); ++t) {
      double& v = panel.values(t, j);
      if (!(v > 0.0)) {
        throw DomainError("log transform of non-positive value for " + panel.names[static_cast<std::size_t>(j)] +
                          " on " + panel.dates[static_cast<std::size_t>(t)].iso());
      }
      v = std::log(v);
    }
  }
  return panel;
}

std::vector<NamedSeries> read_long_csv(std::istream& in, InputKind kind) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("empty CSV input");
  const auto header = csv::split_record(line);
  const std::vector<std::string> expected =
      kind == InputKind::Ohlc ? std::vector<std::string>{"date", "name", "open", "high", "low", "close"}
                              : std::vector<std::string>{"date", "name", "value"};
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  for (const auto& name : expected) {
    if (!column.count(name)) throw DomainError("CSV header is missing column '" + name + "'");
  }

  std::vector<NamedSeries> out;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split_record(line);
    if (fields.size() < header.size()) throw DomainError("line " + std::to_string(line_no) + ": too few fields");
    const std::string context = "line " + std::to_string(line_no);
    const Date date = Date::parse(fields[column["date"]]);
    const std::string& name = fields[column["name"]];
    double value = 0.0;
    if (kind == InputKind::Ohlc) {
      OhlcBar bar{date, parse_double(fields[column["open"]], context), parse_double(fields[column["high"]], context),
                  parse_double(fields[column["low"]], context), parse_double(fields[column["close"]], context)};
      value = range_volatility(bar);
    } else {
      value = parse_double(fields[column["value"]], context);
    }
    auto [it, inserted] = index.emplace(name, out.size());
    if (inserted) out.push_back(NamedSeries{name, {}});
    out[it->second].points.emplace_back(date, value);
  }
  if (out.empty()) throw DomainError("CSV input has no data rows");
  return out;
}

std::vector<NamedSeries> read_long_csv_file(const std::string& path, InputKind kind) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open input file '" + path + "'");
  return read_long_csv(in, kind);
}

void write_wide_csv(std::ostream& out, const Panel& panel) {
  std::vector<std::string> fields{"date"};
  fields.insert(fields.end(), panel.names.begin(), panel.names.end());
  csv::write_record(out, fields);
  for (Eigen::Index t = 0; t < panel.rows(); ++t) {
    fields.assign(1, panel.dates[static_cast<std::size_t>(t)].iso());
    for (Eigen::Index j = 0; j < panel.cols(); ++j) fields.push_back(csv::format_double(panel.values(t, j)));
    csv::write_record(out, fields);
  }
}

Panel read_wide_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("empty CSV input");
  auto header = csv::split_record(line);
  if (header.empty() || header[0] != "date") throw DomainError("wide CSV must start with a 'date' column");
  Panel panel;
  panel.names.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split_record(line);
    if (fields.size() != header.size()) throw DomainError("line " + std::to_string(line_no) + ": field count");
    panel.dates.push_back(Date::parse(fields[0]));
    std::vector<double> row;
    for (std::size_t j = 1; j < fields.size(); ++j) row.push_back(parse_double(fields[j], "line " + std::to_string(line_no)));
    rows.push_back(std::move(row));
  }
  panel.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(panel.names.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t j = 0; j < rows[t].size(); ++j) {
      panel.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
    }
  }
  panel.validate();
  return panel;
}

}  // namespace fconn
