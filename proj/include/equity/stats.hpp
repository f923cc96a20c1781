#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "equity/spatial.hpp"

namespace equity {

struct DesignMatrix {
  std::vector<std::string> observation_ids;
  std::string response_name = "y";
  std::vector<double> response;
  std::vector<std::string> column_names;     // regressors, excluding the intercept
  std::vector<std::vector<double>> columns;  // one vector of length n per regressor
  bool intercept = true;
  std::vector<double> weights;  // empty for ordinary least squares

  std::size_t n() const { return response.size(); }
  std::size_t k() const { return columns.size() + (intercept ? 1 : 0); }
};

inline constexpr std::string_view kInterceptName = "(Intercept)";

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double t_value = 0.0;
  double p_value = 1.0;
};

struct RegressionResult {
  std::string name;
  std::string response;
  std::vector<Coefficient> coefficients;  // intercept first when present
  double r_squared = 0.0;
  double adjusted_r_squared = 0.0;
  std::size_t n = 0;
  std::size_t degrees_of_freedom = 0;

  const Coefficient& coefficient(std::string_view name) const;  // throws LookupError
};

// Least squares by Householder QR. Standard errors come from sigma^2 (R^T R)^-1
// with R from the same factorization. Throws RankDeficientError naming the
// columns that are linear combinations of earlier ones, and ValidationError on
// shape problems or n <= k.
RegressionResult ols_fit(const DesignMatrix& design);

// I_x(a, b), the regularized incomplete beta function.
double regularized_incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double dof);

// Two-sided p-value 2 (1 - F_t(|t|; dof)).
double p_value(double t, double dof);

const char* significance_stars(double p);

inline constexpr std::size_t kMinEquityAreas = 10;

struct RegressionOptions {
  bool ridership_weighted = false;
};

// low_income_share ~ 1 + time/mile + transfers/mile + transfer wait + distance + rail share.
RegressionResult equity_regression(const std::vector<AreaProfile>& areas, const RegressionOptions& options = {});

// One simple regression per convenience metric: metric ~ 1 + low_income_share.
std::vector<RegressionResult> reversed_equity_regressions(const std::vector<AreaProfile>& areas,
                                                          const RegressionOptions& options = {});

// low_income_share ~ 1 + the purpose shares except other_nonhome, which is the
// reference category (the shares sum to one against the intercept).
RegressionResult purpose_regression(const std::vector<AreaProfile>& areas, const RegressionOptions& options = {});

std::string_view metric_label(std::size_t metric_index);
std::string_view purpose_label(Purpose p);

std::string format_regression_csv(const RegressionResult& r);
std::string format_regression_table(const RegressionResult& r);
RegressionResult parse_regression_csv(std::string_view text);

}  // namespace equity
