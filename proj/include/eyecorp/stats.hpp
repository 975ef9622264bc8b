#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "eyecorp/error.hpp"
#include "eyecorp/special_functions.hpp"

namespace eyecorp {

struct Correlation {
  double r = 0.0;
  double p = 1.0;  // two-sided, t with n-2 df
  std::size_t n = 0;
};

/// Product-moment correlation with its two-sided significance.
template <class DerivedX, class DerivedY>
Correlation pearson(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  const Eigen::Index n = x.size();
  if (y.size() != n) throw Error("pearson: columns differ in length");
  if (n < 3) throw Error("pearson: need at least 3 observations");
  const Eigen::ArrayXd xc = x.template cast<double>().array() - x.template cast<double>().mean();
  const Eigen::ArrayXd yc = y.template cast<double>().array() - y.template cast<double>().mean();
  const double sxx = xc.square().sum();
  const double syy = yc.square().sum();
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DataError("zero variance");
  Correlation c;
  c.n = static_cast<std::size_t>(n);
  c.r = std::clamp((xc * yc).sum() / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  if (std::fabs(c.r) >= 1.0) {
    c.p = 0.0;
  } else {
    const double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
    c.p = student_t_two_sided_p(t, df);
  }
  return c;
}

/// Named predictor columns (no intercept column; one is added by ols_fit)
/// and a response. Rows must be complete.
struct DesignMatrix {
  std::vector<std::string> predictor_names;
  Eigen::MatrixXd predictors;  // n x k
  Eigen::VectorXd response;    // n
  std::string response_name = "y";

  Eigen::Index rows() const { return response.size(); }
  Eigen::Index predictor_count() const { return predictors.cols(); }
  void validate() const;
};

struct Coefficient {
  std::string name;
  double beta = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 1.0;
};

struct RegressionResult {
  std::string response_name;
  std::vector<Coefficient> coefficients;  // "(Intercept)" first
  std::size_t n = 0;
  int df_model = 0;
  int df_resid = 0;
  double f_stat = 0.0;   // NaN for an intercept-only model
  double p_model = 1.0;  // NaN for an intercept-only model
  double r_squared = 0.0;
  double sigma = 0.0;    // residual standard error
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;

  const Coefficient& coefficient(std::string_view name) const;
  /// Two-sided interval for coefficient i at the given confidence level.
  std::pair<double, double> confidence_interval(std::size_t i, double level = 0.95) const;
};

/// Ordinary least squares with intercept via column-pivoted Householder QR.
/// Rank-deficient designs raise DataError naming the dependent columns.
RegressionResult ols_fit(const DesignMatrix& design);

struct CorrelationMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd r;  // NaN where undefined
  Eigen::MatrixXd p;
  Eigen::MatrixXi n;  // pairwise-complete observation counts
  std::vector<std::string> warnings;
};

/// Pairwise-complete correlations; NaN cells mark missing values.
CorrelationMatrix correlation_table(const std::vector<std::string>& names, const Eigen::MatrixXd& columns);

/// Variance inflation factor of every column, 1/(1 - R_j^2) with R_j^2 from
/// regressing column j on the others plus an intercept. +inf under perfect
/// collinearity.
Eigen::VectorXd vif(const Eigen::MatrixXd& predictors);

/// "<.0001" below 1e-4, otherwise four decimals.
std::string format_p(double p);
/// "F(5,1285) = 4.629, p = 0.0003, R² = 0.0177".
std::string format_model_line(const RegressionResult& result);

/// Aligned plain-text table per result: term, beta, SE beta, t, p, then the
/// model line.
std::string regression_report(std::span<const RegressionResult> results);
/// Correlations above the diagonal, probabilities below, blank diagonal.
std::string render_correlation_table(const CorrelationMatrix& table);

/// Machine-readable duplicate of a regression: one row per term with the
/// model statistics repeated.
std::string regression_tsv(std::span<const RegressionResult> results);
std::vector<RegressionResult> read_regression_tsv(std::string_view text, const std::string& source);

std::string correlation_tsv(const CorrelationMatrix& table);
CorrelationMatrix read_correlation_tsv(std::string_view text, const std::string& source);

}  // namespace eyecorp
