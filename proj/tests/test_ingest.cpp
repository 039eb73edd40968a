#include "fconn/csv.hpp"
#include "fconn/ingest.hpp"

#include <doctest.h>

#include <sstream>

using namespace fconn;

namespace {

NamedSeries series(const std::string& name, const std::vector<std::string>& dates, double start = 1.0) {
  NamedSeries s{name, {}};
  double v = start;
  for (const auto& d : dates) s.points.emplace_back(Date::parse(d), v++);
  return s;
}

Panel ramp_panel(int t_len, int n = 2) {
  Panel p;
  p.values = Matrix(t_len, n);
  for (int t = 0; t < t_len; ++t) {
    p.dates.push_back(Date(std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{t}}}));
    for (int j = 0; j < n; ++j) p.values(t, j) = t + 100.0 * j;
  }
  for (int j = 0; j < n; ++j) p.names.push_back("s" + std::to_string(j));
  return p;
}

}  // namespace

TEST_CASE("date parsing") {
  CHECK(Date::parse("2008-11-25").iso() == "2008-11-25");
  CHECK(Date::parse("2008-09-16") < Date::parse("2008-11-25"));
  CHECK_THROWS_AS(Date::parse("2008-13-01"), DomainError);
  CHECK_THROWS_AS(Date::parse("2008/11/25"), DomainError);
  CHECK_THROWS_AS(Date::parse("2009-02-29"), DomainError);
}

TEST_CASE("range volatility") {
  SUBCASE("flat bar is zero") {
    CHECK(range_volatility({Date{}, 100, 100, 100, 100}) == 0.0);
  }
  // Reference values evaluated at 40 digits with mpmath from the log-price
  // form u = ln(H/O), d = ln(L/O), c = ln(C/O).
  SUBCASE("symmetric log range") {
    const double v = range_volatility({Date{}, 100, 110, 100.0 * 100.0 / 110.0, 100});
    CHECK(v == doctest::Approx(0.01822256493091146560370901).epsilon(1e-13));
  }
  SUBCASE("ordinary bar") {
    CHECK(range_volatility({Date{}, 100, 105, 98, 103}) == doctest::Approx(0.00204422095078701675883271).epsilon(1e-13));
  }
  SUBCASE("common price rescaling leaves the estimate unchanged") {
    const OhlcBar bar{Date{}, 37.2, 39.9, 36.1, 38.4};
    for (double k : {1e-3, 0.5, 7.0, 1e4}) {
      const OhlcBar scaled{Date{}, bar.open * k, bar.high * k, bar.low * k, bar.close * k};
      CHECK(range_volatility(scaled) == doctest::Approx(range_volatility(bar)).epsilon(1e-12));
    }
  }
  SUBCASE("never negative") {
    // Close at the high on a bar with a tiny range below the open.
    CHECK(range_volatility({Date{}, 100, 100.0001, 80, 100.0001}) >= 0.0);
  }
  SUBCASE("invalid bars") {
    CHECK_THROWS_AS(range_volatility({Date{}, 0, 1, 1, 1}), DomainError);
    CHECK_THROWS_AS(range_volatility({Date{}, 100, 99, 98, 100}), DomainError);
    CHECK_THROWS_AS(range_volatility({Date{}, 100, 101, 102, 100}), DomainError);
  }
}

TEST_CASE("panel assembly") {
  const std::vector<std::string> five{"2020-01-01", "2020-01-02", "2020-01-03", "2020-01-06", "2020-01-07"};
  SUBCASE("all dates shared") {
    const Panel p = assemble_panel({series("a", five), series("b", five, 10.0)});
    CHECK(p.rows() == 5);
    CHECK(p.cols() == 2);
    CHECK(p.names == std::vector<std::string>{"a", "b"});
    CHECK(p.values(4, 1) == 14.0);
  }
  SUBCASE("inner join") {
    const Panel p = assemble_panel(
        {series("a", five), series("b", {"2019-12-31", "2020-01-02", "2020-01-03", "2020-01-07", "2020-01-08"})});
    REQUIRE(p.rows() == 3);
    CHECK(p.dates[0].iso() == "2020-01-02");
    CHECK(p.dates[2].iso() == "2020-01-07");
    CHECK(p.values(2, 0) == 5.0);
    CHECK(p.values(2, 1) == 4.0);
  }
  SUBCASE("unordered input dates are sorted") {
    const Panel p = assemble_panel({series("a", {"2020-01-03", "2020-01-01", "2020-01-02"})});
    CHECK(p.dates.front().iso() == "2020-01-01");
    CHECK(p.values(0, 0) == 2.0);
  }
  SUBCASE("duplicate dates") {
    CHECK_THROWS_AS(assemble_panel({series("a", {"2020-01-01", "2020-01-01"})}), EstimationError);
  }
  SUBCASE("no common dates") {
    CHECK_THROWS_AS(assemble_panel({series("a", {"2020-01-01"}), series("b", {"2020-01-02"})}), EstimationError);
  }
}

TEST_CASE("rolling windows") {
  SUBCASE("single window") {
    const auto w = rolling_windows(ramp_panel(150), {150, 1});
    REQUIRE(w.size() == 1);
    CHECK(w[0].end_date == ramp_panel(150).dates[149]);
  }
  SUBCASE("three windows labelled by their last date") {
    const Panel p = ramp_panel(152);
    const auto w = rolling_windows(p, {150, 1});
    REQUIRE(w.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(w[k].end_date == p.dates[149 + k]);
      CHECK(w[k].slice.dates.back() == w[k].end_date);
      CHECK(w[k].slice.rows() == 150);
      CHECK(w[k].slice.values(0, 0) == double(k));
    }
  }
  SUBCASE("step arithmetic") {
    CHECK(rolling_windows(ramp_panel(300), {150, 50}).size() == 4);
    CHECK(window_count(160, {150, 1}) == 11);
    CHECK(window_count(299, {150, 50}) == 3);
  }
  SUBCASE("slices stay inside the source") {
    const Panel p = ramp_panel(40);
    for (const auto& w : rolling_windows(p, {7, 3})) {
      CHECK(w.slice.dates.front() >= p.dates.front());
      CHECK(w.slice.dates.back() <= p.dates.back());
    }
  }
  SUBCASE("invalid specs") {
    CHECK_THROWS_AS(rolling_windows(ramp_panel(10), {0, 1}), DomainError);
    CHECK_THROWS_AS(rolling_windows(ramp_panel(10), {5, 0}), DomainError);
    CHECK_THROWS_AS(rolling_windows(ramp_panel(10), {11, 1}), DomainError);
  }
}

TEST_CASE("demeaning and transforms") {
  const Matrix x = demean_columns(ramp_panel(11).values);
  CHECK(x.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);

  Panel p = ramp_panel(3);
  p.values(0, 0) = 1.0;
  const Panel logged = apply_transform(p, VolatilityTransform::Log);
  CHECK(logged.values(0, 0) == 0.0);
  CHECK(logged.values(2, 1) == doctest::Approx(std::log(102.0)));
  p.values(1, 0) = 0.0;
  CHECK_THROWS_AS(apply_transform(p, VolatilityTransform::Log), DomainError);
  CHECK(apply_transform(p, VolatilityTransform::Raw).values == p.values);
}

TEST_CASE("long and wide CSV") {
  SUBCASE("values") {
    std::istringstream in("date,name,value\n2020-01-02,b,2\n2020-01-01,a,1.5\n2020-01-02,a,2.5\n2020-01-01,b,1\n");
    const auto s = read_long_csv(in, InputKind::Values);
    REQUIRE(s.size() == 2);
    CHECK(s[0].name == "b");
    const Panel p = assemble_panel(s);
    CHECK(p.values(0, 1) == 1.5);

    std::ostringstream out;
    write_wide_csv(out, p);
    CHECK(out.str() == "date,b,a\n2020-01-01,1,1.5\n2020-01-02,2,2.5\n");
    std::istringstream back(out.str());
    const Panel q = read_wide_csv(back);
    CHECK(q.values == p.values);
    CHECK(q.names == p.names);
  }
  SUBCASE("ohlc") {
    std::istringstream in("date,name,open,high,low,close\n2020-01-01,\"Bank, A\",100,105,98,103\n");
    const auto s = read_long_csv(in, InputKind::Ohlc);
    CHECK(s[0].name == "Bank, A");
    CHECK(s[0].points[0].second == doctest::Approx(0.00204422095078701675883271).epsilon(1e-13));
  }
  SUBCASE("malformed") {
    std::istringstream missing("date,name\n");
    CHECK_THROWS_AS(read_long_csv(missing, InputKind::Values), DomainError);
    std::istringstream bad("date,name,value\n2020-01-01,a,abc\n");
    CHECK_THROWS_AS(read_long_csv(bad, InputKind::Values), DomainError);
  }
}

TEST_CASE("csv primitives") {
  CHECK(csv::split_record("a,\"b,c\",\"d\"\"e\"") == std::vector<std::string>{"a", "b,c", "d\"e"});
  CHECK(csv::split_record("x,,y\r") == std::vector<std::string>{"x", "", "y"});
  CHECK(csv::quote("plain") == "plain");
  CHECK(csv::quote("a\"b") == "\"a\"\"b\"");
  CHECK(csv::format_double(0.1) == "0.1");
  CHECK(std::stod(csv::format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK_THROWS_AS(csv::split_record("\"open"), DomainError);
}
