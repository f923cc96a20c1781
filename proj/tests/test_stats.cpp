#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "equity/errors.hpp"
#include "equity/stats.hpp"
#include "oracles.hpp"

using namespace equity;

namespace {

DesignMatrix design(std::vector<double> y, std::vector<std::vector<double>> cols) {
  DesignMatrix d;
  d.response = std::move(y);
  for (std::size_t j = 0; j < cols.size(); ++j) d.column_names.push_back("x" + std::to_string(j + 1));
  d.columns = std::move(cols);
  return d;
}

std::vector<double> fitted_residuals(const DesignMatrix& d, const RegressionResult& r) {
  std::vector<double> e(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) {
    double fit = d.intercept ? r.coefficients[0].estimate : 0.0;
    for (std::size_t j = 0; j < d.columns.size(); ++j)
      fit += r.coefficients[j + (d.intercept ? 1 : 0)].estimate * d.columns[j][i];
    e[i] = d.response[i] - fit;
  }
  return e;
}

AreaProfile area(std::mt19937_64& rng, int i) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AreaProfile a;
  a.geoid = "A" + std::to_string(100000 + i);
  a.ridership = 1 + static_cast<long long>(u(rng) * 100);
  a.metrics.time_per_mile = 3 + 6 * u(rng);
  a.metrics.transfers_per_mile = u(rng);
  a.metrics.transfer_wait_minutes = 10 * u(rng);
  a.metrics.network_miles = 0.5 + 4 * u(rng);
  a.metrics.rail_share = u(rng);
  double total = 0;
  for (auto& p : a.purpose_shares) total += (p = 0.05 + u(rng));
  for (auto& p : a.purpose_shares) p /= total;
  return a;
}

}  // namespace

TEST(Ols, ExactLine) {
  std::vector<double> x, y;
  for (int i = 0; i < 10; ++i) {
    x.push_back(i * 0.7 - 1.0);
    y.push_back(2.0 + 3.0 * x.back());
  }
  auto r = ols_fit(design(y, {x}));
  EXPECT_NEAR(r.coefficients[0].estimate, 2.0, 1e-9);
  EXPECT_NEAR(r.coefficients[1].estimate, 3.0, 1e-9);
  EXPECT_NEAR(r.r_squared, 1.0, 1e-12);
  EXPECT_EQ(r.coefficients[0].name, kInterceptName);
  EXPECT_EQ(r.degrees_of_freedom, 8u);
}

TEST(Ols, InterceptOnly) {
  auto r = ols_fit(design({1, 2, 3}, {}));
  ASSERT_EQ(r.coefficients.size(), 1u);
  EXPECT_NEAR(r.coefficients[0].estimate, 2.0, 1e-15);
  EXPECT_EQ(r.r_squared, 0.0);
  EXPECT_NEAR(r.coefficients[0].std_error, std::sqrt(1.0 / 3.0), 1e-15);
}

TEST(Ols, MatchesExactRationalOracle) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> v(-400, 400);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t k = 1 + trial % 5, n = k + 2 + trial % (12 - k - 1);
    std::vector<std::vector<double>> cols(k, std::vector<double>(n));
    std::vector<double> y(n);
    for (auto& c : cols)
      for (auto& x : c) x = v(rng) / 16.0;
    for (auto& t : y) t = v(rng) / 8.0;
    auto d = design(y, cols);
    auto exact = oracle::normal_equations(d);
    auto r = ols_fit(d);
    for (std::size_t j = 0; j < d.k(); ++j) {
      EXPECT_NEAR(r.coefficients[j].estimate, exact.beta[j], 1e-10 * std::max(1.0, std::fabs(exact.beta[j])));
      EXPECT_NEAR(r.coefficients[j].std_error, exact.std_error[j], 1e-10 * std::max(1.0, exact.std_error[j]));
    }
  }
}

TEST(Ols, PlantedRecoveryAgainstNormalEquations) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  const std::size_t n = 10000;
  std::vector<double> x1(n), x2(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = u(rng);
    x2[i] = u(rng);
    y[i] = 0.1 + 0.68 * x1[i] + 0.04 * x2[i] + noise(rng);
  }
  auto r = ols_fit(design(y, {x1, x2}));
  const double truth[] = {0.1, 0.68, 0.04};
  for (int j = 0; j < 3; ++j)
    EXPECT_LE(std::fabs(r.coefficients[j].estimate - truth[j]), 3 * r.coefficients[j].std_error) << j;

  // Normal equations in long double on centred data.
  long double m1 = 0, m2 = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) m1 += x1[i], m2 += x2[i], my += y[i];
  m1 /= n, m2 /= n, my /= n;
  long double s11 = 0, s12 = 0, s22 = 0, s1y = 0, s2y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double a = x1[i] - m1, b = x2[i] - m2, c = y[i] - my;
    s11 += a * a, s12 += a * b, s22 += b * b, s1y += a * c, s2y += b * c;
  }
  const long double det = s11 * s22 - s12 * s12;
  const long double b1 = (s22 * s1y - s12 * s2y) / det, b2 = (s11 * s2y - s12 * s1y) / det;
  EXPECT_NEAR(r.coefficients[1].estimate, static_cast<double>(b1), 1e-10);
  EXPECT_NEAR(r.coefficients[2].estimate, static_cast<double>(b2), 1e-10);
  EXPECT_NEAR(r.coefficients[0].estimate, static_cast<double>(my - b1 * m1 - b2 * m2), 1e-10);
}

TEST(Ols, Errors) {
  EXPECT_THROW(ols_fit(design({1, 2}, {{1, 2}})), ValidationError);
  try {
    ols_fit(design({1, 2, 3, 4}, {{1, 2, 3, 4}, {2, 4, 6, 8}}));
    FAIL();
  } catch (const RankDeficientError& e) {
    EXPECT_EQ(e.columns(), std::vector<std::string>{"x2"});
  }
  EXPECT_THROW(ols_fit(design({1, 2, 3, 4}, {{5, 5, 5, 5}})), RankDeficientError);
}

TEST(Ols, StatisticsBounds) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 15 + trial;
    std::vector<std::vector<double>> cols(3, std::vector<double>(n));
    std::vector<double> y(n);
    for (auto& c : cols)
      for (auto& x : c) x = g(rng);
    for (auto& t : y) t = g(rng);
    auto r = ols_fit(design(y, cols));
    EXPECT_GE(r.r_squared, 0.0);
    EXPECT_LE(r.r_squared, 1.0);
    EXPECT_LE(r.adjusted_r_squared, r.r_squared);
    for (const auto& c : r.coefficients) {
      EXPECT_GE(c.p_value, 0.0);
      EXPECT_LE(c.p_value, 1.0);
      EXPECT_NEAR(c.t_value, c.estimate / c.std_error, 1e-12 * std::fabs(c.t_value) + 1e-15);
    }
  }
}

TEST(Properties, ScalingInvariance) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  const std::size_t n = 200;
  std::vector<double> x1(n), x2(n), y(n);
  for (std::size_t i = 0; i < n; ++i) x1[i] = g(rng), x2[i] = g(rng), y[i] = 1 + 0.5 * x1[i] - x2[i] + g(rng);
  auto base = ols_fit(design(y, {x1, x2}));
  for (double c : {1e-3, 2.5, 1e4}) {
    auto scaled = x1;
    for (auto& v : scaled) v *= c;
    auto r = ols_fit(design(y, {scaled, x2}));
    EXPECT_NEAR(r.coefficients[1].estimate * c, base.coefficients[1].estimate, 1e-9);
    EXPECT_NEAR(r.coefficients[1].t_value, base.coefficients[1].t_value, 1e-9);
    EXPECT_NEAR(r.coefficients[1].p_value, base.coefficients[1].p_value, 1e-9);
    EXPECT_NEAR(r.coefficients[2].estimate, base.coefficients[2].estimate, 1e-9);
    EXPECT_NEAR(r.r_squared, base.r_squared, 1e-12);
  }
}

TEST(Properties, ResidualOrthogonality) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  const std::size_t n = 500;
  std::vector<std::vector<double>> cols(4, std::vector<double>(n));
  std::vector<double> y(n);
  for (auto& c : cols)
    for (auto& x : c) x = 3 * g(rng);
  for (auto& t : y) t = g(rng);
  auto d = design(y, cols);
  auto e = fitted_residuals(d, ols_fit(d));
  EXPECT_NEAR(std::accumulate(e.begin(), e.end(), 0.0), 0.0, 1e-10);
  const double norm_y = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
  for (const auto& c : cols)
    EXPECT_LT(std::fabs(std::inner_product(c.begin(), c.end(), e.begin(), 0.0)), 1e-8 * norm_y);
}

TEST(Properties, RowPermutationInvariance) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  const std::size_t n = 100;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = g(rng), y[i] = 2 * x[i] + g(rng);
  auto base = ols_fit(design(y, {x}));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<double> px(n), py(n);
  for (std::size_t i = 0; i < n; ++i) px[i] = x[order[i]], py[i] = y[order[i]];
  auto r = ols_fit(design(py, {px}));
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_NEAR(r.coefficients[j].estimate, base.coefficients[j].estimate, 1e-12);
    EXPECT_NEAR(r.coefficients[j].std_error, base.coefficients[j].std_error, 1e-12);
  }
}

TEST(Ols, WeightedMatchesRowScaling) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> g;
  const std::size_t n = 50;
  std::vector<double> x(n), y(n), w(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = g(rng), y[i] = 1 + x[i] + g(rng), w[i] = 1 + (i % 4);
  auto d = design(y, {x});
  d.weights = w;
  auto r = ols_fit(d);
  // Duplicating row i w_i times gives the same point estimates.
  std::vector<double> dx, dy;
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < static_cast<int>(w[i]); ++c) dx.push_back(x[i]), dy.push_back(y[i]);
  auto dup = ols_fit(design(dy, {dx}));
  EXPECT_NEAR(r.coefficients[1].estimate, dup.coefficients[1].estimate, 1e-12);
}

TEST(PValue, Examples) {
  for (double d : {1.0, 2.0, 5.0, 30.0, 1e3, 1e6}) EXPECT_EQ(p_value(0.0, d), 1.0);
  EXPECT_NEAR(p_value(1.96, 1e6), 0.05, 5e-4);
  EXPECT_NEAR(p_value(4.9785, 39000), 6.604e-7, 0.05 * 6.604e-7);
  EXPECT_NEAR(p_value(1.0, 1.0), 0.5, 1e-14);  // Cauchy: 2 (1/2 - atan(1)/pi)
  EXPECT_NEAR(p_value(2.0, 2.0), 1.0 - 2.0 / std::sqrt(6.0), 1e-14);
  EXPECT_THROW(p_value(1.0, 0.5), std::invalid_argument);
}

TEST(PValue, SimpsonOracle) {
  for (double dof : {1.0, 3.0, 10.0, 57.0, 1000.0, 1e6})
    for (double t : {0.1, 0.7, 1.5, 1.96, 2.5, 3.3}) EXPECT_NEAR(p_value(t, dof), oracle::simpson_p_value(t, dof), 1e-9);
  for (double t : {4.9785, 6.0, 8.0}) {
    const double p = p_value(t, 500.0);
    EXPECT_NEAR(p, oracle::simpson_tail(t, 500.0), 1e-6 * p);
  }
}

TEST(PValue, MonotoneInAbsT) {
  for (double dof : {1.0, 4.0, 40.0, 40000.0}) {
    double previous = 1.0;
    for (double t = 0.05; t < 40; t += 0.05) {
      const double p = p_value(t, dof);
      EXPECT_LE(p, previous) << t << " " << dof;
      EXPECT_EQ(p, p_value(-t, dof));
      previous = p;
    }
  }
}

TEST(IncompleteBeta, KnownValues) {
  EXPECT_NEAR(regularized_incomplete_beta(1, 1, 0.3), 0.3, 1e-15);
  EXPECT_NEAR(regularized_incomplete_beta(2, 3, 0.4), 0.5248, 1e-14);
  EXPECT_NEAR(regularized_incomplete_beta(0.5, 0.5, 0.5), 0.5, 1e-14);
  EXPECT_EQ(regularized_incomplete_beta(2, 2, 0), 0);
  EXPECT_EQ(regularized_incomplete_beta(2, 2, 1), 1);
  EXPECT_NEAR(student_t_cdf(0.0, 7), 0.5, 1e-15);
}

TEST(Stars, Thresholds) {
  EXPECT_STREQ(significance_stars(0.0005), "***");
  EXPECT_STREQ(significance_stars(0.005), "**");
  EXPECT_STREQ(significance_stars(0.03), "*");
  EXPECT_STREQ(significance_stars(0.2), "");
}

TEST(EquityRegression, ExactSingleFactor) {
  std::mt19937_64 rng(31);
  std::vector<AreaProfile> areas;
  for (int i = 0; i < 60; ++i) {
    auto a = area(rng, i);
    a.low_income_share = 0.2 + 0.05 * a.metrics.transfers_per_mile;
    areas.push_back(a);
  }
  auto r = equity_regression(areas);
  EXPECT_EQ(r.name, "equity");
  EXPECT_NEAR(r.coefficient("Transfers by Distance (#/mile)").estimate, 0.05, 1e-9);
  EXPECT_NEAR(r.coefficient("(Intercept)").estimate, 0.2, 1e-9);
  for (const char* name : {"Time by Distance (min/mile)", "Transfer Wait Time (min)", "Distance (mile)",
                           "Rail Mode Share (%)"})
    EXPECT_NEAR(r.coefficient(name).estimate, 0.0, 1e-9) << name;
}

TEST(EquityRegression, NoisyRecovery) {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<AreaProfile> areas;
  for (int i = 0; i < 5000; ++i) {
    auto a = area(rng, i);
    a.low_income_share = 0.2 + 0.05 * a.metrics.transfers_per_mile + noise(rng);
    areas.push_back(a);
  }
  const auto& c = equity_regression(areas).coefficient("Transfers by Distance (#/mile)");
  EXPECT_LE(std::fabs(c.estimate - 0.05), 3 * c.std_error);
  EXPECT_LT(c.p_value, 1e-3);
}

TEST(EquityRegression, Degenerate) {
  std::mt19937_64 rng(33);
  auto a = area(rng, 0);
  std::vector<AreaProfile> same(20, a);
  EXPECT_THROW(equity_regression(same), RankDeficientError);
  std::vector<AreaProfile> few;
  for (int i = 0; i < 9; ++i) few.push_back(area(rng, i));
  try {
    equity_regression(few);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("9"), std::string::npos);
  }
}

TEST(EquityRegression, ReversedDirection) {
  std::mt19937_64 rng(34);
  std::vector<AreaProfile> areas;
  for (int i = 0; i < 40; ++i) {
    auto a = area(rng, i);
    a.low_income_share = 0.01 * i;
    a.metrics.time_per_mile = 4.0 + 3.0 * a.low_income_share;
    areas.push_back(a);
  }
  auto rs = reversed_equity_regressions(areas);
  ASSERT_EQ(rs.size(), kMetricCount);
  EXPECT_EQ(rs[0].name, "reversed_time_per_mile");
  EXPECT_NEAR(rs[0].coefficient("Low-Income Ridership Share").estimate, 3.0, 1e-9);
}

TEST(PurposeRegression, ExactHomeWork) {
  std::mt19937_64 rng(35);
  std::vector<AreaProfile> areas;
  for (int i = 0; i < 50; ++i) {
    auto a = area(rng, i);
    a.low_income_share = 0.3 - 0.4 * a.purpose_shares[static_cast<std::size_t>(Purpose::home_work)];
    areas.push_back(a);
  }
  auto r = purpose_regression(areas);
  EXPECT_EQ(r.coefficients.size(), 5u);
  EXPECT_NEAR(r.coefficient("Home to Work / Work to Home").estimate, -0.4, 1e-9);
  EXPECT_THROW(r.coefficient("Other (not a home trip)"), LookupError);
}

TEST(PurposeRegression, NoisySign) {
  std::mt19937_64 rng(36);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<AreaProfile> areas;
  for (int i = 0; i < 2000; ++i) {
    auto a = area(rng, i);
    a.low_income_share = 0.3 - 0.4 * a.purpose_shares[0] + noise(rng);
    areas.push_back(a);
  }
  const auto& c = purpose_regression(areas).coefficient("Home to Work / Work to Home");
  EXPECT_LT(c.estimate, 0.0);
  EXPECT_LT(c.p_value, 1e-3);
}

TEST(RegressionIo, CsvRoundTripAndTable) {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<AreaProfile> areas;
  for (int i = 0; i < 300; ++i) {
    auto a = area(rng, i);
    a.low_income_share = 0.1 + 0.3 * a.metrics.rail_share + noise(rng);
    areas.push_back(a);
  }
  auto r = equity_regression(areas);
  auto back = parse_regression_csv(format_regression_csv(r));
  EXPECT_EQ(back.name, r.name);
  ASSERT_EQ(back.coefficients.size(), r.coefficients.size());
  for (std::size_t j = 0; j < r.coefficients.size(); ++j) {
    EXPECT_EQ(back.coefficients[j].name, r.coefficients[j].name);
    EXPECT_NEAR(back.coefficients[j].estimate, r.coefficients[j].estimate, 1e-5 * std::fabs(r.coefficients[j].estimate));
  }
  EXPECT_EQ(back.n, 300u);
  const auto table = format_regression_table(r);
  EXPECT_NE(table.find("Rail Mode Share (%)"), std::string::npos);
  EXPECT_NE(table.find("< 2.2e-16***"), std::string::npos);
  EXPECT_NE(table.find("Adjusted R-squared"), std::string::npos);
}
