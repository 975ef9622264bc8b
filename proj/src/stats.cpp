#include "eyecorp/stats.hpp"

#include <algorithm>
#include <limits>
#include <array>
#include <map>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "eyecorp/corpus.hpp"
#include "eyecorp/tsv.hpp"

namespace eyecorp {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Fixed-point rendering with no locale dependence.
std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.{}f}", v, digits);
}

}  // namespace

void DesignMatrix::validate() const {
  if (static_cast<std::size_t>(predictors.cols()) != predictor_names.size())
    throw Error("design: predictor names and columns differ");
  if (predictors.cols() > 0 && predictors.rows() != response.size())
    throw Error("design: predictor and response lengths differ");
  if (response.size() <= predictors.cols() + 1)
    throw DataError(fmt::format("design: n = {} must exceed the number of predictors + 1 = {}", response.size(),
                                predictors.cols() + 1));
  if (!response.allFinite() || !predictors.allFinite()) throw DataError("design: missing or non-finite cell");
}

const Coefficient& RegressionResult::coefficient(std::string_view name) const {
  for (const auto& c : coefficients)
    if (c.name == name) return c;
  throw Error(fmt::format("no coefficient named '{}'", name));
}

std::pair<double, double> RegressionResult::confidence_interval(std::size_t i, double level) const {
  const auto& c = coefficients.at(i);
  const double q = student_t_quantile(0.5 + 0.5 * level, df_resid);
  return {c.beta - q * c.se, c.beta + q * c.se};
}

RegressionResult ols_fit(const DesignMatrix& design) {
  design.validate();
  const Eigen::Index n = design.rows();
  const Eigen::Index k = design.predictor_count();
  Eigen::MatrixXd x(n, k + 1);
  x.col(0).setOnes();
  if (k > 0) x.rightCols(k) = design.predictors;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < k + 1) {
    std::vector<std::string> dependent;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < k + 1; ++i) {
      const auto col = perm(i);
      dependent.push_back(col == 0 ? "(Intercept)" : design.predictor_names[static_cast<std::size_t>(col - 1)]);
    }
    std::sort(dependent.begin(), dependent.end());
    throw DataError(fmt::format("rank-deficient design: linearly dependent column(s) {}", fmt::join(dependent, ", ")));
  }

  RegressionResult result;
  result.response_name = design.response_name;
  result.n = static_cast<std::size_t>(n);
  result.df_model = static_cast<int>(k);
  result.df_resid = static_cast<int>(n - k - 1);

  const Eigen::VectorXd beta = qr.solve(design.response);
  result.fitted = x * beta;
  result.residuals = design.response - result.fitted;
  const double ss_resid = result.residuals.squaredNorm();
  const double mean_y = design.response.mean();
  const double ss_total = (design.response.array() - mean_y).square().sum();
  if (!(ss_total > 0.0)) throw DataError(fmt::format("response '{}' has zero variance", design.response_name));
  const double ss_model = ss_total - ss_resid;
  result.r_squared = std::clamp(1.0 - ss_resid / ss_total, 0.0, 1.0);
  const double sigma2 = ss_resid / result.df_resid;
  result.sigma = std::sqrt(sigma2);

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k + 1, k + 1).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k + 1, k + 1));
  const Eigen::MatrixXd cov_perm = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  const Eigen::MatrixXd cov = perm * cov_perm * perm.transpose();

  for (Eigen::Index j = 0; j <= k; ++j) {
    Coefficient c;
    c.name = j == 0 ? "(Intercept)" : design.predictor_names[static_cast<std::size_t>(j - 1)];
    c.beta = beta(j);
    c.se = std::sqrt(sigma2 * cov(j, j));
    c.t = c.beta / c.se;
    c.p = student_t_two_sided_p(c.t, result.df_resid);
    result.coefficients.push_back(std::move(c));
  }

  if (k > 0) {
    result.f_stat = (ss_model / result.df_model) / sigma2;
    result.p_model = f_upper_tail(result.f_stat, result.df_model, result.df_resid);
  } else {
    result.f_stat = kNaN;
    result.p_model = kNaN;
  }
  return result;
}

CorrelationMatrix correlation_table(const std::vector<std::string>& names, const Eigen::MatrixXd& columns) {
  const Eigen::Index k = columns.cols();
  if (k < 2) throw Error("correlation table needs at least two columns");
  if (static_cast<std::size_t>(k) != names.size()) throw Error("correlation table: names and columns differ");
  CorrelationMatrix table;
  table.names = names;
  table.r = Eigen::MatrixXd::Constant(k, k, kNaN);
  table.p = Eigen::MatrixXd::Constant(k, k, kNaN);
  table.n = Eigen::MatrixXi::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    table.r(i, i) = 1.0;
    table.p(i, i) = 0.0;
    table.n(i, i) = static_cast<int>((!columns.col(i).array().isNaN()).count());
    for (Eigen::Index j = i + 1; j < k; ++j) {
      std::vector<double> xs, ys;
      for (Eigen::Index row = 0; row < columns.rows(); ++row) {
        const double a = columns(row, i), b = columns(row, j);
        if (std::isnan(a) || std::isnan(b)) continue;
        xs.push_back(a);
        ys.push_back(b);
      }
      table.n(i, j) = table.n(j, i) = static_cast<int>(xs.size());
      try {
        const auto c = pearson(Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                               Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size())));
        table.r(i, j) = table.r(j, i) = c.r;
        table.p(i, j) = table.p(j, i) = c.p;
      } catch (const Error& e) {
        table.warnings.push_back(fmt::format("{} ~ {}: {}", names[static_cast<std::size_t>(i)],
                                             names[static_cast<std::size_t>(j)], e.what()));
      }
    }
  }
  return table;
}

Eigen::VectorXd vif(const Eigen::MatrixXd& predictors) {
  const Eigen::Index n = predictors.rows();
  const Eigen::Index k = predictors.cols();
  if (k < 2) throw Error("vif needs at least two predictors");
  Eigen::VectorXd out(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::VectorXd y = predictors.col(j);
    const double ss_total = (y.array() - y.mean()).square().sum();
    if (!(ss_total > 0.0)) throw DataError(fmt::format("vif: predictor column {} is constant", j));
    Eigen::MatrixXd x(n, k);
    x.col(0).setOnes();
    for (Eigen::Index c = 0, o = 1; c < k; ++c)
      if (c != j) x.col(o++) = predictors.col(c);
    // complete orthogonal decomposition tolerates collinear regressors
    const Eigen::VectorXd coef = x.completeOrthogonalDecomposition().solve(y);
    const double ss_resid = (y - x * coef).squaredNorm();
    const double r2 = 1.0 - ss_resid / ss_total;
    out(j) = r2 >= 1.0 - 1e-12 ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 - r2);
  }
  return out;
}

std::string format_p(double p) {
  if (std::isnan(p)) return "NA";
  if (p < 1e-4) return "<.0001";
  return fixed(p, 4);
}

std::string format_model_line(const RegressionResult& result) {
  const std::string p = result.p_model < 1e-4 ? "p < .0001" : "p = " + format_p(result.p_model);
  return fmt::format("F({},{}) = {}, {}, R² = {}", result.df_model, result.df_resid, fixed(result.f_stat, 3), p,
                     fixed(result.r_squared, 4));
}

std::string regression_report(std::span<const RegressionResult> results) {
  std::string out;
  for (const auto& result : results) {
    std::vector<std::array<std::string, 5>> rows;
    rows.push_back({"Term", "β", "SE β", "t", "p"});
    for (const auto& c : result.coefficients)
      rows.push_back({c.name, fixed(c.beta, 8), fixed(c.se, 8), fixed(c.t, 2), format_p(c.p)});
    std::array<std::size_t, 5> width{};
    for (const auto& row : rows)
      for (std::size_t i = 0; i < 5; ++i) width[i] = std::max(width[i], utf8_length(row[i]));
    out += fmt::format("Response: {} (n = {})\n", result.response_name, result.n);
    for (const auto& row : rows) {
      std::string line = row[0] + std::string(width[0] - utf8_length(row[0]), ' ');
      for (std::size_t i = 1; i < 5; ++i) line += "  " + std::string(width[i] - utf8_length(row[i]), ' ') + row[i];
      out += line + '\n';
    }
    out += format_model_line(result) + "\n\n";
  }
  return out;
}

std::string render_correlation_table(const CorrelationMatrix& table) {
  const std::size_t k = table.names.size();
  std::vector<std::vector<std::string>> cells(k + 1, std::vector<std::string>(k + 1));
  for (std::size_t i = 0; i < k; ++i) {
    cells[0][i + 1] = table.names[i];
    cells[i + 1][0] = table.names[i];
    for (std::size_t j = 0; j < k; ++j) {
      const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
      if (i < j) cells[i + 1][j + 1] = fixed(table.r(a, b), 3);
      else if (i > j) cells[i + 1][j + 1] = format_p(table.p(a, b));
    }
  }
  std::vector<std::size_t> width(k + 1, 0);
  for (const auto& row : cells)
    for (std::size_t j = 0; j <= k; ++j) width[j] = std::max(width[j], utf8_length(row[j]));
  std::string out;
  for (const auto& row : cells) {
    std::string line = row[0] + std::string(width[0] - utf8_length(row[0]), ' ');
    for (std::size_t j = 1; j <= k; ++j) line += "  " + std::string(width[j] - utf8_length(row[j]), ' ') + row[j];
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  return out;
}

std::string regression_tsv(std::span<const RegressionResult> results) {
  std::string out = "response\tterm\tbeta\tse\tt\tp\tn\tdf_model\tdf_resid\tf\tp_model\tr_squared\n";
  for (const auto& r : results)
    for (const auto& c : r.coefficients)
      out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", r.response_name, c.name,
                         tsv::format_number(c.beta), tsv::format_number(c.se), tsv::format_number(c.t),
                         tsv::format_number(c.p), r.n, r.df_model, r.df_resid, tsv::format_number(r.f_stat),
                         tsv::format_number(r.p_model), tsv::format_number(r.r_squared));
  return out;
}

std::vector<RegressionResult> read_regression_tsv(std::string_view text, const std::string& source) {
  const auto table = tsv::parse(text, source);
  const auto col = [&](std::string_view name) { return table.column(name); };
  const auto c_resp = col("response"), c_term = col("term"), c_beta = col("beta"), c_se = col("se"), c_t = col("t"),
             c_p = col("p"), c_n = col("n"), c_dfm = col("df_model"), c_dfr = col("df_resid"), c_f = col("f"),
             c_pm = col("p_model"), c_r2 = col("r_squared");
  auto value = [&](std::size_t r, std::size_t c) {
    auto v = table.optional_number(r, c);
    return v ? *v : kNaN;
  };
  std::vector<RegressionResult> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& resp = table.rows[r][c_resp];
    if (out.empty() || out.back().response_name != resp) {
      RegressionResult res;
      res.response_name = resp;
      res.n = static_cast<std::size_t>(table.integer(r, c_n));
      res.df_model = static_cast<int>(table.integer(r, c_dfm));
      res.df_resid = static_cast<int>(table.integer(r, c_dfr));
      res.f_stat = value(r, c_f);
      res.p_model = value(r, c_pm);
      res.r_squared = value(r, c_r2);
      out.push_back(std::move(res));
    }
    out.back().coefficients.push_back(
        {table.rows[r][c_term], value(r, c_beta), value(r, c_se), value(r, c_t), value(r, c_p)});
  }
  return out;
}

std::string correlation_tsv(const CorrelationMatrix& table) {
  std::string out = "var1\tvar2\tr\tp\tn\n";
  const auto k = table.names.size();
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
      out += fmt::format("{}\t{}\t{}\t{}\t{}\n", table.names[i], table.names[j], tsv::format_number(table.r(a, b)),
                         tsv::format_number(table.p(a, b)), table.n(a, b));
    }
  return out;
}

CorrelationMatrix read_correlation_tsv(std::string_view text, const std::string& source) {
  const auto table = tsv::parse(text, source);
  const auto c1 = table.column("var1"), c2 = table.column("var2"), cr = table.column("r"), cp = table.column("p"),
             cn = table.column("n");
  std::vector<std::string> names;
  auto index_of = [&](const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it != names.end()) return static_cast<Eigen::Index>(it - names.begin());
    names.push_back(name);
    return static_cast<Eigen::Index>(names.size() - 1);
  };
  struct Cell {
    Eigen::Index i, j;
    double r, p;
    int n;
  };
  std::vector<Cell> cells;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto i = index_of(table.rows[r][c1]);
    const auto j = index_of(table.rows[r][c2]);
    auto rv = table.optional_number(r, cr), pv = table.optional_number(r, cp);
    cells.push_back({i, j, rv ? *rv : kNaN, pv ? *pv : kNaN, static_cast<int>(table.integer(r, cn))});
  }
  CorrelationMatrix out;
  out.names = names;
  const auto k = static_cast<Eigen::Index>(names.size());
  out.r = Eigen::MatrixXd::Identity(k, k);
  out.p = Eigen::MatrixXd::Zero(k, k);
  out.n = Eigen::MatrixXi::Zero(k, k);
  for (const auto& c : cells) {
    out.r(c.i, c.j) = out.r(c.j, c.i) = c.r;
    out.p(c.i, c.j) = out.p(c.j, c.i) = c.p;
    out.n(c.i, c.j) = out.n(c.j, c.i) = c.n;
  }
  return out;
}

}  // namespace eyecorp
