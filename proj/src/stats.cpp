#include "equity/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "equity/csv.hpp"
#include "equity/errors.hpp"

namespace equity {

const Coefficient& RegressionResult::coefficient(std::string_view wanted) const {
  for (const auto& c : coefficients)
    if (c.name == wanted) return c;
  throw LookupError(fmt::format("regression {} has no term '{}'", name, wanted));
}

RegressionResult ols_fit(const DesignMatrix& d) {
  const std::size_t n = d.n();
  const std::size_t k = d.k();
  if (d.columns.size() != d.column_names.size()) throw ValidationError("column names do not match columns");
  for (std::size_t j = 0; j < d.columns.size(); ++j)
    if (d.columns[j].size() != n)
      throw ValidationError(fmt::format("column {} has {} rows, expected {}", d.column_names[j], d.columns[j].size(), n));
  if (!d.weights.empty() && d.weights.size() != n) throw ValidationError("weights length does not match response");
  if (k == 0) throw ValidationError("no regressors");
  if (n <= k) throw ValidationError(fmt::format("need more observations than regressors (n={}, k={})", n, k));

  std::vector<std::string> names;
  if (d.intercept) names.emplace_back(kInterceptName);
  names.insert(names.end(), d.column_names.begin(), d.column_names.end());

  // Weighted least squares rescales each row by sqrt(w).
  std::vector<double> sw(n, 1.0);
  for (std::size_t i = 0; i < d.weights.size(); ++i) {
    if (!(d.weights[i] > 0.0)) throw ValidationError("weights must be positive");
    sw[i] = std::sqrt(d.weights[i]);
  }

  // Column-major working copy of X and y.
  std::vector<std::vector<double>> a;
  a.reserve(k);
  if (d.intercept) a.push_back(sw);
  for (const auto& col : d.columns) {
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = col[i] * sw[i];
    a.push_back(std::move(c));
  }
  std::vector<double> qty(n);
  for (std::size_t i = 0; i < n; ++i) qty[i] = d.response[i] * sw[i];

  std::vector<double> col_norm(k);
  for (std::size_t j = 0; j < k; ++j)
    col_norm[j] = std::sqrt(std::inner_product(a[j].begin(), a[j].end(), a[j].begin(), 0.0));

  std::vector<std::string> dependent;
  std::vector<double> v(n);
  for (std::size_t j = 0; j < k; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < n; ++i) norm += a[j][i] * a[j][i];
    norm = std::sqrt(norm);
    if (norm <= 1e-10 * col_norm[j] || col_norm[j] == 0.0) {
      dependent.push_back(names[j]);
      continue;
    }
    const double alpha = a[j][j] > 0 ? -norm : norm;
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t i = j; i < n; ++i) v[i] = a[j][i];
    v[j] -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = j; i < n; ++i) vnorm2 += v[i] * v[i];
    auto reflect = [&](std::vector<double>& x) {
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) dot += v[i] * x[i];
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = j; i < n; ++i) x[i] -= f * v[i];
    };
    for (std::size_t c = j; c < k; ++c) reflect(a[c]);
    reflect(qty);
    a[j][j] = alpha;
    for (std::size_t i = j + 1; i < n; ++i) a[j][i] = 0.0;
  }
  if (!dependent.empty()) throw RankDeficientError(dependent);

  // R(r, c) = a[c][r] for r <= c.
  auto R = [&](std::size_t r, std::size_t c) { return a[c][r]; };
  std::vector<double> beta(k);
  for (std::size_t r = k; r-- > 0;) {
    double s = qty[r];
    for (std::size_t c = r + 1; c < k; ++c) s -= R(r, c) * beta[c];
    beta[r] = s / R(r, r);
  }
  // Upper-triangular inverse of R; diag((X^T X)^-1) = row norms squared.
  std::vector<std::vector<double>> rinv(k, std::vector<double>(k, 0.0));
  for (std::size_t c = 0; c < k; ++c) {
    rinv[c][c] = 1.0 / R(c, c);
    for (std::size_t r = c; r-- > 0;) {
      double s = 0.0;
      for (std::size_t m = r + 1; m <= c; ++m) s += R(r, m) * rinv[m][c];
      rinv[r][c] = -s / R(r, r);
    }
  }

  auto row_value = [&](std::size_t i, std::size_t j) {
    if (d.intercept) return j == 0 ? 1.0 : d.columns[j - 1][i];
    return d.columns[j][i];
  };
  double rss = 0.0, wsum = 0.0, wy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fit = 0.0;
    for (std::size_t j = 0; j < k; ++j) fit += row_value(i, j) * beta[j];
    const double w = sw[i] * sw[i];
    const double e = d.response[i] - fit;
    rss += w * e * e;
    wsum += w;
    wy += w * d.response[i];
  }
  const double ybar = wy / wsum;
  double tss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = d.response[i] - ybar;
    tss += sw[i] * sw[i] * e * e;
  }

  RegressionResult out;
  out.response = d.response_name;
  out.n = n;
  out.degrees_of_freedom = n - k;
  const double dof = static_cast<double>(n - k);
  out.r_squared = tss > 0.0 ? std::clamp(1.0 - rss / tss, 0.0, 1.0) : 0.0;
  out.adjusted_r_squared =
      std::min(out.r_squared, 1.0 - (1.0 - out.r_squared) * static_cast<double>(n - 1) / dof);
  const double sigma2 = rss / dof;
  for (std::size_t j = 0; j < k; ++j) {
    double diag = 0.0;
    for (std::size_t m = j; m < k; ++m) diag += rinv[j][m] * rinv[j][m];
    Coefficient c;
    c.name = names[j];
    c.estimate = beta[j];
    c.std_error = std::sqrt(sigma2 * diag);
    if (c.std_error > 0.0) {
      c.t_value = c.estimate / c.std_error;
      c.p_value = p_value(c.t_value, dof);
    } else {
      // Perfect fit: any nonzero estimate is infinitely significant.
      c.t_value = c.estimate == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), c.estimate);
      c.p_value = c.estimate == 0.0 ? 1.0 : 0.0;
    }
    out.coefficients.push_back(std::move(c));
  }
  return out;
}

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
// Returns NaN when it fails to converge within the iteration budget.
double beta_continued_fraction(double a, double b, double x, int max_iter) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double log_beta_prefix(double a, double b, double x) {
  return a * std::log(x) + b * std::log1p(-x) - (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta requires a, b > 0");
  if (std::isnan(x)) return x;
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(log_beta_prefix(a, b, x));
  // The direct fraction converges fast below the mode and avoids cancellation in
  // small tails; above the mode use the symmetry relation when it stalls.
  if (x < (a + 1.0) / (a + b + 2.0)) return std::clamp(front * beta_continued_fraction(a, b, x, 10000) / a, 0.0, 1.0);
  const double direct = beta_continued_fraction(a, b, x, 2000);
  if (!std::isnan(direct)) return std::clamp(front * direct / a, 0.0, 1.0);
  return std::clamp(1.0 - front * beta_continued_fraction(b, a, 1.0 - x, 10000) / b, 0.0, 1.0);
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("student_t_cdf requires dof > 0");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
  return t > 0 ? 1.0 - tail : tail;
}

double p_value(double t, double dof) {
  if (!(dof >= 1.0)) throw std::invalid_argument("p_value requires dof >= 1");
  if (std::isnan(t)) return t;
  if (t == 0.0) return 1.0;
  if (std::isinf(t)) return 0.0;
  return std::clamp(regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t)), 0.0, 1.0);
}

const char* significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

namespace {

constexpr std::array<std::string_view, kMetricCount> kMetricLabels = {
    "Time by Distance (min/mile)", "Transfers by Distance (#/mile)", "Transfer Wait Time (min)", "Distance (mile)",
    "Rail Mode Share (%)"};

constexpr std::array<std::string_view, kPurposeCount> kPurposeLabels = {
    "Home to Work / Work to Home", "Home to Other / Other to Home", "Other (not a home trip)",
    "Home to Social / Social to Home", "Home to School / School to Home"};

DesignMatrix base_design(const std::vector<AreaProfile>& areas, const RegressionOptions& options) {
  DesignMatrix d;
  for (const auto& a : areas) {
    d.observation_ids.push_back(a.geoid);
    if (options.ridership_weighted) d.weights.push_back(static_cast<double>(a.ridership));
  }
  return d;
}

}  // namespace

std::string_view metric_label(std::size_t i) { return kMetricLabels.at(i); }
std::string_view purpose_label(Purpose p) { return kPurposeLabels.at(static_cast<std::size_t>(p)); }

RegressionResult equity_regression(const std::vector<AreaProfile>& areas, const RegressionOptions& options) {
  if (areas.size() < kMinEquityAreas)
    throw ValidationError(
        fmt::format("equity regression needs at least {} areas, got {}", kMinEquityAreas, areas.size()));
  auto d = base_design(areas, options);
  d.response_name = "low_income_share";
  d.columns.assign(kMetricCount, {});
  for (std::size_t m = 0; m < kMetricCount; ++m) d.column_names.emplace_back(kMetricLabels[m]);
  for (const auto& a : areas) {
    d.response.push_back(a.low_income_share);
    auto v = to_array(a.metrics);
    for (std::size_t m = 0; m < kMetricCount; ++m) d.columns[m].push_back(v[m]);
  }
  auto r = ols_fit(d);
  r.name = "equity";
  return r;
}

std::vector<RegressionResult> reversed_equity_regressions(const std::vector<AreaProfile>& areas,
                                                          const RegressionOptions& options) {
  if (areas.size() < kMinEquityAreas)
    throw ValidationError(
        fmt::format("equity regression needs at least {} areas, got {}", kMinEquityAreas, areas.size()));
  std::vector<RegressionResult> out;
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    auto d = base_design(areas, options);
    d.response_name = std::string(kMetricNames[m]);
    d.column_names = {"Low-Income Ridership Share"};
    d.columns.assign(1, {});
    for (const auto& a : areas) {
      d.response.push_back(to_array(a.metrics)[m]);
      d.columns[0].push_back(a.low_income_share);
    }
    auto r = ols_fit(d);
    r.name = "reversed_" + std::string(kMetricNames[m]);
    out.push_back(std::move(r));
  }
  return out;
}

RegressionResult purpose_regression(const std::vector<AreaProfile>& areas, const RegressionOptions& options) {
  auto d = base_design(areas, options);
  d.response_name = "low_income_share";
  for (std::size_t p = 0; p < kPurposeCount; ++p) {
    if (p == static_cast<std::size_t>(Purpose::other_nonhome)) continue;
    d.column_names.emplace_back(kPurposeLabels[p]);
    d.columns.emplace_back();
    for (const auto& a : areas) d.columns.back().push_back(a.purpose_shares[p]);
  }
  for (const auto& a : areas) d.response.push_back(a.low_income_share);
  auto r = ols_fit(d);
  r.name = "purpose";
  return r;
}

std::string format_regression_csv(const RegressionResult& r) {
  std::string out = "regression,term,estimate,std_error,t_value,p_value,significance\n";
  for (const auto& c : r.coefficients)
    out += csv::join({r.name, c.name, format_number(c.estimate), format_number(c.std_error), format_number(c.t_value),
                      format_number(c.p_value), significance_stars(c.p_value)}) +
           '\n';
  out += csv::join({r.name, "R-squared", format_number(r.r_squared), "", "", "", ""}) + '\n';
  out += csv::join({r.name, "Adjusted R-squared", format_number(r.adjusted_r_squared), "", "", "", ""}) + '\n';
  out += csv::join({r.name, "n", std::to_string(r.n), "", "", "", ""}) + '\n';
  out += csv::join({r.name, "dof", std::to_string(r.degrees_of_freedom), "", "", "", ""}) + '\n';
  return out;
}

namespace {

std::string format_p(double p) {
  if (p < 2.2e-16) return "< 2.2e-16";
  return format_number(p);
}

}  // namespace

std::string format_regression_table(const RegressionResult& r) {
  std::size_t width = std::string_view("Explanatory Variables").size();
  for (const auto& c : r.coefficients) width = std::max(width, c.name.size());
  std::string out = fmt::format("Regression: {} (response: {})\n", r.name, r.response);
  const std::string rule(width + 42, '-');
  out += rule + '\n';
  out += fmt::format("{:<{}}  {:>12}  {:>12}  {:>14}\n", "Explanatory Variables", width, "Parameter", "t-value",
                     "p-value");
  out += rule + '\n';
  for (const auto& c : r.coefficients)
    out += fmt::format("{:<{}}  {:>12}  {:>12}  {:>14}\n", c.name, width, format_number(c.estimate),
                       format_number(c.t_value), format_p(c.p_value) + significance_stars(c.p_value));
  out += rule + '\n';
  out += fmt::format("Adjusted R-squared: {}    R-squared: {}\n", format_number(r.adjusted_r_squared),
                     format_number(r.r_squared));
  out += fmt::format("Observations: {}    Degrees of freedom: {}\n", r.n, r.degrees_of_freedom);
  out += "Statistical significance coded as *p < 0.05, **p < 0.01, ***p < 0.001\n";
  return out;
}

RegressionResult parse_regression_csv(std::string_view text) {
  auto table = csv::Table::parse(text);
  const std::string file = "regression csv";
  auto reg = table.require_column("regression", file);
  auto term = table.require_column("term", file);
  auto est = table.require_column("estimate", file);
  auto se = table.require_column("std_error", file);
  auto t = table.require_column("t_value", file);
  auto p = table.require_column("p_value", file);
  auto num = [&](const csv::Row& row, std::size_t c) {
    if (c >= row.fields.size()) throw IngestionError(file, fmt::format("line {}: short row", row.line));
    const auto& f = row.fields[c];
    if (f == "inf") return std::numeric_limits<double>::infinity();
    if (f == "-inf") return -std::numeric_limits<double>::infinity();
    if (f == "nan") return std::numeric_limits<double>::quiet_NaN();
    auto v = csv::parse_double(f);
    if (!v) throw IngestionError(file, fmt::format("line {}: bad number '{}'", row.line, f));
    return *v;
  };
  RegressionResult r;
  for (const auto& row : table.rows()) {
    if (term >= row.fields.size()) throw IngestionError(file, fmt::format("line {}: short row", row.line));
    r.name = row.fields[reg];
    const auto& name = row.fields[term];
    if (name == "R-squared") {
      r.r_squared = num(row, est);
    } else if (name == "Adjusted R-squared") {
      r.adjusted_r_squared = num(row, est);
    } else if (name == "n") {
      r.n = static_cast<std::size_t>(num(row, est));
    } else if (name == "dof") {
      r.degrees_of_freedom = static_cast<std::size_t>(num(row, est));
    } else {
      r.coefficients.push_back({name, num(row, est), num(row, se), num(row, t), num(row, p)});
    }
  }
  return r;
}

}  // namespace equity
