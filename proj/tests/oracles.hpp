#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's density or estimator code.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double normal_logpdf(double x, double mu, double var) {
  return -0.5 * (kLog2Pi + std::log(var) + (x - mu) * (x - mu) / var);
}

inline double t_logpdf(double x, double df) {
  return std::lgamma(0.5 * (df + 1)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * std::numbers::pi) -
         0.5 * (df + 1) * std::log1p(x * x / df);
}

/// Dense multivariate normal log density through an explicit inverse and determinant.
inline double dense_mvn_logpdf(const Vec& x, const Vec& mu, const Mat& cov) {
  const Vec d = x - mu;
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + std::log(cov.determinant()) +
                 d.dot(cov.inverse() * d));
}

/// log D(grad G) = 0.5 log det(G'G / n) for a numerically differentiated
/// data-generating map `g(theta)` with the pivots held fixed.
inline double fd_log_d(const std::function<Vec(const Vec&)>& g, const Vec& theta, double n, double h = 1e-6) {
  const Vec base = g(theta);
  Mat jac(base.size(), theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    Vec up = theta, dn = theta;
    const double step = h * std::max(1.0, std::abs(theta(j)));
    up(j) += step;
    dn(j) -= step;
    jac.col(j) = (g(up) - g(dn)) / (2.0 * step);
  }
  const Mat gram = jac.transpose() * jac / n;
  return 0.5 * std::log(gram.determinant());
}

/// Row-major flattening of a p x p matrix.
inline Vec flatten(const Mat& a) {
  Vec v(a.size());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) v(i * a.cols() + j) = a(i, j);
  return v;
}

inline Mat unflatten(const Vec& v, Eigen::Index p, Eigen::Index offset) {
  Mat a(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) a(i, j) = v(offset + i * p + j);
  return a;
}

/// Composite Simpson weights on [lo, hi] with an even number of intervals.
inline void simpson_grid(double lo, double hi, int intervals, std::vector<double>& x, std::vector<double>& w) {
  if (intervals % 2) ++intervals;
  const double h = (hi - lo) / intervals;
  x.resize(static_cast<std::size_t>(intervals) + 1);
  w.resize(x.size());
  for (int i = 0; i <= intervals; ++i) {
    x[static_cast<std::size_t>(i)] = lo + h * i;
    const double c = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    w[static_cast<std::size_t>(i)] = c * h / 3.0;
  }
}

/// log of sum_i exp(a_i) w_i, the log-domain analogue of a quadrature sum.
inline double log_weighted_sum(const std::vector<double>& log_f, const std::vector<double>& w) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : log_f) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (std::size_t i = 0; i < log_f.size(); ++i) acc += w[i] * std::exp(log_f[i] - hi);
  return hi + std::log(acc);
}

/// Nelder-Mead minimizer; adequate for the handful of smooth objectives in the tests.
inline Vec nelder_mead(const std::function<double(const Vec&)>& f, Vec x0, double step, int max_iter = 20000,
                       double tol = 1e-13) {
  const Eigen::Index n = x0.size();
  std::vector<Vec> s(static_cast<std::size_t>(n) + 1, x0);
  std::vector<double> fv(s.size());
  for (Eigen::Index i = 0; i < n; ++i) s[static_cast<std::size_t>(i) + 1](i) += step;
  for (std::size_t i = 0; i < s.size(); ++i) fv[i] = f(s[i]);
  for (int it = 0; it < max_iter; ++it) {
    std::vector<std::size_t> idx(s.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<Vec> s2;
    std::vector<double> f2;
    for (std::size_t i : idx) {
      s2.push_back(s[i]);
      f2.push_back(fv[i]);
    }
    s = s2;
    fv = f2;
    if (std::abs(fv.back() - fv.front()) < tol * (1.0 + std::abs(fv.front()))) break;
    Vec centroid = Vec::Zero(n);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) centroid += s[i];
    centroid /= static_cast<double>(n);
    const Vec xr = centroid + (centroid - s.back());
    const double fr = f(xr);
    if (fr < fv.front()) {
      const Vec xe = centroid + 2.0 * (centroid - s.back());
      const double fe = f(xe);
      if (fe < fr) {
        s.back() = xe;
        fv.back() = fe;
      } else {
        s.back() = xr;
        fv.back() = fr;
      }
    } else if (fr < fv[fv.size() - 2]) {
      s.back() = xr;
      fv.back() = fr;
    } else {
      const Vec xc = centroid + 0.5 * (s.back() - centroid);
      const double fc = f(xc);
      if (fc < fv.back()) {
        s.back() = xc;
        fv.back() = fc;
      } else {
        for (std::size_t i = 1; i < s.size(); ++i) {
          s[i] = s[0] + 0.5 * (s[i] - s[0]);
          fv[i] = f(s[i]);
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < fv.size(); ++i)
    if (fv[i] < fv[best]) best = i;
  return s[best];
}

/// Repeated Nelder-Mead restarts from the previous optimum.
inline Vec minimize(const std::function<double(const Vec&)>& f, Vec x0, double step, int restarts = 6) {
  for (int r = 0; r < restarts; ++r) x0 = nelder_mead(f, x0, step / (1 << r));
  return x0;
}

/// Least-squares monotone fit by exhaustive search over all block partitions.
inline std::vector<double> brute_force_isotonic(const std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<double> best;
  double best_err = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::vector<double> fit(n);
    std::size_t start = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == n - 1 || (mask >> i) & 1u) {
        double mean = 0.0;
        for (std::size_t k = start; k <= i; ++k) mean += y[k];
        mean /= static_cast<double>(i - start + 1);
        for (std::size_t k = start; k <= i; ++k) fit[k] = mean;
        start = i + 1;
      }
    }
    if (!std::is_sorted(fit.begin(), fit.end())) continue;
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err += (fit[i] - y[i]) * (fit[i] - y[i]);
    if (err < best_err - 1e-15) {
      best_err = err;
      best = fit;
    }
  }
  return best;
}

}  // namespace oracle
