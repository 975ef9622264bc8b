#pragma once

// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Skip-gram negative-sampling loss written directly from the definition.
inline double sgns_loss(const Eigen::MatrixXd& in, const Eigen::MatrixXd& out, int center, int context,
                        const std::vector<int>& negatives) {
  const auto logsig = [](double x) { return -std::log(1.0 + std::exp(-x)); };
  double loss = -logsig(out.row(context).dot(in.row(center)));
  for (int n : negatives) loss -= logsig(-out.row(n).dot(in.row(center)));
  return loss;
}

// Two-sided Student-t p-value by numerically integrating the density with
// composite Simpson on a substituted, finite interval.
inline double t_density(double x, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * std::numbers::pi);
  return c * std::pow(1.0 + x * x / df, -(df + 1) / 2);
}

inline double t_two_sided_p(double t, double df) {
  // P(|T| > |t|) = 2 * int_{|t|}^inf f(x) dx; substitute x = |t| + s u/(1-u)
  const double a = std::fabs(t);
  const double s = std::max(1.0, a);
  const int n = 20000;
  const double h = 1.0 / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double u = i * h;
    double v = 0.0;
    if (i < n) {
      const double x = a + s * u / (1 - u);
      v = s * t_density(x, df) / ((1 - u) * (1 - u));
    } else if (df == 1.0) {
      v = 1.0 / (s * std::numbers::pi);  // Cauchy tail: f(x) x^2 -> 1/pi
    }
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    sum += w * v;
  }
  return std::min(1.0, 2.0 * sum * h / 3.0);
}

// Upper tail by quadrature of the F density; needs d2 >= 2.
inline double f_density(double x, double d1, double d2) {
  if (x <= 0) return 0.0;
  const double lb = std::lgamma(d1 / 2) + std::lgamma(d2 / 2) - std::lgamma((d1 + d2) / 2);
  return std::exp((d1 / 2) * std::log(d1 / d2) + (d1 / 2 - 1) * std::log(x) - ((d1 + d2) / 2) * std::log1p(d1 * x / d2) -
                  lb);
}

inline double f_upper(double f, double d1, double d2) {
  const double s = std::max(1.0, f);  // tail length scale
  const int n = 40000;
  const double h = 1.0 / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double u = i * h;
    double v = 0.0;
    if (i < n) {
      const double x = f + s * u / (1 - u);
      v = s * f_density(x, d1, d2) / ((1 - u) * (1 - u));
    } else if (d2 == 2.0) {
      v = 1.0 / s;  // f(x) x^2 -> 1 when d2 = 2
    }
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    sum += w * v;
  }
  return std::min(1.0, sum * h / 3.0);
}

// Textbook OLS through the normal equations.
struct Ols {
  Eigen::VectorXd beta, se, t, p;
  double f = 0, p_model = 0, r2 = 0, sigma = 0;
  int df_model = 0, df_resid = 0;
};

inline Ols normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const auto n = x.rows();
  const auto k = x.cols();
  Eigen::MatrixXd X(n, k + 1);
  X.col(0).setOnes();
  X.rightCols(k) = x;
  const Eigen::MatrixXd xtx = X.transpose() * X;
  const Eigen::MatrixXd inv = xtx.inverse();
  Ols o;
  o.beta = inv * X.transpose() * y;
  const Eigen::VectorXd e = y - X * o.beta;
  o.df_model = static_cast<int>(k);
  o.df_resid = static_cast<int>(n - k - 1);
  const double sse = e.squaredNorm();
  const double sst = (y.array() - y.mean()).square().sum();
  const double s2 = sse / o.df_resid;
  o.sigma = std::sqrt(s2);
  o.se = (inv.diagonal() * s2).array().sqrt();
  o.t = o.beta.array() / o.se.array();
  o.p.resize(k + 1);
  for (Eigen::Index i = 0; i <= k; ++i) o.p(i) = t_two_sided_p(o.t(i), o.df_resid);
  o.r2 = 1.0 - sse / sst;
  o.f = ((sst - sse) / k) / s2;
  o.p_model = f_upper(o.f, k, o.df_resid);
  return o;
}

// Viewing measures by rescanning the fixation list once per word.
struct Fix {
  int word;
  double dur;
};

struct Measures {
  double ffd, gd, tvd;
};

inline std::map<int, Measures> trace(const std::vector<Fix>& raw, bool rightward_only) {
  std::vector<Fix> fx;
  for (const auto& f : raw)
    if (f.word >= 0) fx.push_back(f);
  std::map<int, Measures> out;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    const int w = fx[i].word;
    if (out.count(w)) continue;
    Measures m{fx[i].dur, 0.0, 0.0};
    for (const auto& f : fx)
      if (f.word == w) m.tvd += f.dur;
    for (std::size_t j = i; j < fx.size(); ++j) {
      const bool leaves = rightward_only ? fx[j].word > w : fx[j].word != w;
      if (leaves) break;
      if (fx[j].word == w) m.gd += fx[j].dur;
    }
    out[w] = m;
  }
  return out;
}

// Selection by brute force: for every sentence and every model compute the
// rank gap from scratch, then take the quota by repeated arg-max.
inline std::vector<std::pair<std::string, std::string>> select(const std::vector<std::string>& ids,
                                                               const std::vector<std::vector<double>>& pp,
                                                               const std::vector<std::string>& model_ids,
                                                               double fraction, const std::vector<bool>& eligible,
                                                               const std::vector<int>& id_order) {
  const std::size_t n = ids.size(), m = pp.size();
  // rank = 1 + number of sentences strictly better (lower pp, or equal pp and earlier id)
  std::vector<std::vector<long long>> rank(m, std::vector<long long>(n));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t i = 0; i < n; ++i) {
      long long r = 1;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && (pp[a][j] < pp[a][i] || (pp[a][j] == pp[a][i] && id_order[j] < id_order[i]))) ++r;
      rank[a][i] = r;
    }
  std::size_t candidates = 0;
  for (bool e : eligible) candidates += e ? 1 : 0;
  const auto quota = static_cast<std::size_t>(std::ceil(fraction * candidates - 1e-9));
  std::vector<int> owner(n, -1);
  std::vector<long long> best(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!eligible[i]) continue;
    for (std::size_t a = 0; a < m; ++a) {
      long long gap = INT64_MAX;
      for (std::size_t b = 0; b < m; ++b)
        if (b != a) gap = std::min(gap, rank[b][i] - rank[a][i]);
      if (owner[i] < 0 || gap > best[i]) {
        owner[i] = static_cast<int>(a);
        best[i] = gap;
      }
    }
  }
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t a = 0; a < m; ++a) {
    std::vector<bool> taken(n, false);
    for (std::size_t q = 0; q < quota; ++q) {
      int pick = -1;
      for (std::size_t i = 0; i < n; ++i) {
        if (owner[i] != static_cast<int>(a) || taken[i]) continue;
        if (pick < 0 || best[i] > best[pick] || (best[i] == best[pick] && id_order[i] < id_order[pick]))
          pick = static_cast<int>(i);
      }
      if (pick < 0) break;
      taken[pick] = true;
      out.emplace_back(ids[pick], model_ids[a]);
    }
  }
  return out;
}

}  // namespace oracle
