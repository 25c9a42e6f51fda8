#pragma once

// Numerical kernels shared by every engine: Cholesky factors, Gaussian and
// Student-t log densities, the basic samplers, log-sum-exp, and isotonic
// (pool-adjacent-violators) regression.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "fidfac/error.hpp"

namespace fidfac {

template <typename Scalar>
using VecT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VecT<double>;
using Mat = MatT<double>;
using Rng = std::mt19937_64;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;
inline constexpr double kLn10 = std::numbers::ln10;

/// Lower-triangular p x p factor with strictly positive diagonal.
///
/// A, B and C only ever enter the densities through their Gram products, so
/// this is the canonical representative of each orthogonal equivalence class.
class LowerTriFactor {
 public:
  LowerTriFactor() = default;

  /// Validates shape, zero upper triangle and positive diagonal.
  explicit LowerTriFactor(Mat factor);

  static LowerTriFactor identity(Eigen::Index p) { return LowerTriFactor(Mat::Identity(p, p)); }

  /// Builds the factor from the unconstrained coordinates
  /// (log-diagonal first, then sub-diagonal entries row by row).
  static LowerTriFactor from_unconstrained(std::span<const double> coords, Eigen::Index p);

  /// Inverse of from_unconstrained.
  void to_unconstrained(std::span<double> out) const;

  static Eigen::Index unconstrained_size(Eigen::Index p) { return p * (p + 1) / 2; }

  Eigen::Index dim() const { return factor_.rows(); }
  const Mat& matrix() const { return factor_; }
  Mat gram() const { return factor_ * factor_.transpose(); }
  /// log |L L'|
  double log_det_gram() const { return 2.0 * factor_.diagonal().array().log().sum(); }

  bool operator==(const LowerTriFactor& other) const { return factor_ == other.factor_; }

 private:
  Mat factor_;
};

/// Cholesky factor of a symmetric positive-definite matrix.
/// Throws NotPositiveDefinite when any pivot is not strictly positive.
LowerTriFactor chol_factor(const Mat& s);

/// chol_factor with the documented jitter policy: on failure the diagonal is
/// inflated once by 1e-10 * trace(S) / p before giving up.
LowerTriFactor chol_with_jitter(const Mat& s);

/// log N_p(x; mu, L L') for a precomputed factor.
template <typename DerivedX, typename DerivedMu, typename DerivedL>
typename DerivedX::Scalar mvn_logpdf_chol(const Eigen::MatrixBase<DerivedX>& x,
                                          const Eigen::MatrixBase<DerivedMu>& mu,
                                          const Eigen::MatrixBase<DerivedL>& chol) {
  using Scalar = typename DerivedX::Scalar;
  const auto p = static_cast<Scalar>(x.size());
  const VecT<Scalar> z = chol.template triangularView<Eigen::Lower>().solve((x - mu).eval());
  return Scalar(-0.5) * z.squaredNorm() - chol.diagonal().array().log().sum() -
         Scalar(0.5) * p * Scalar(kLog2Pi);
}

/// log N_p(x; mu, cov).
template <typename DerivedX, typename DerivedMu, typename DerivedC>
typename DerivedX::Scalar mvn_logpdf(const Eigen::MatrixBase<DerivedX>& x,
                                     const Eigen::MatrixBase<DerivedMu>& mu,
                                     const Eigen::MatrixBase<DerivedC>& cov) {
  using Scalar = typename DerivedX::Scalar;
  if (x.size() != mu.size() || cov.rows() != x.size() || cov.cols() != x.size())
    throw Error(ErrorCode::LengthMismatch, "mvn_logpdf dimensions disagree");
  Eigen::LLT<MatT<Scalar>> llt(cov.eval());
  if (llt.info() != Eigen::Success || (llt.matrixL().toDenseMatrix().diagonal().array() <= 0).any())
    throw Error(ErrorCode::NotPositiveDefinite, "mvn_logpdf covariance");
  const MatT<Scalar> l = llt.matrixL();
  return mvn_logpdf_chol(x, mu, l);
}

/// Log density of the multivariate Student t with location mu, scale matrix
/// and df degrees of freedom.
template <typename DerivedX, typename DerivedMu, typename DerivedC>
typename DerivedX::Scalar mvt_logpdf(const Eigen::MatrixBase<DerivedX>& x,
                                     const Eigen::MatrixBase<DerivedMu>& mu,
                                     const Eigen::MatrixBase<DerivedC>& scale,
                                     typename DerivedX::Scalar df) {
  using Scalar = typename DerivedX::Scalar;
  using std::lgamma;
  using std::log;
  using std::log1p;
  if (!(df > 0)) throw Error(ErrorCode::InvalidDegreesOfFreedom, "mvt_logpdf df must be positive");
  if (x.size() != mu.size() || scale.rows() != x.size() || scale.cols() != x.size())
    throw Error(ErrorCode::LengthMismatch, "mvt_logpdf dimensions disagree");
  Eigen::LLT<MatT<Scalar>> llt(scale.eval());
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NotPositiveDefinite, "mvt_logpdf scale");
  const MatT<Scalar> l = llt.matrixL();
  if ((l.diagonal().array() <= 0).any())
    throw Error(ErrorCode::NotPositiveDefinite, "mvt_logpdf scale");
  const auto p = static_cast<Scalar>(x.size());
  const VecT<Scalar> z = l.template triangularView<Eigen::Lower>().solve((x - mu).eval());
  const Scalar half = Scalar(0.5);
  return lgamma(half * (df + p)) - lgamma(half * df) - half * p * log(df * Scalar(std::numbers::pi)) -
         l.diagonal().array().log().sum() - half * (df + p) * log1p(z.squaredNorm() / df);
}

/// log(sum(exp(v))), stable for arbitrarily negative entries.
template <typename Scalar>
Scalar logsumexp(std::span<const Scalar> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "logsumexp of an empty list");
  Scalar hi = -std::numeric_limits<Scalar>::infinity();
  for (Scalar v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  Scalar acc = 0;
  for (Scalar v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

inline double logsumexp(const std::vector<double>& values) {
  return logsumexp(std::span<const double>(values));
}

/// log of the arithmetic mean of exp(v).
inline double log_mean_exp(std::span<const double> values) {
  return logsumexp(values) - std::log(static_cast<double>(values.size()));
}

struct LogMeanEstimate {
  double log_mean = 0.0;
  double mc_se = 0.0;  // standard error of log_mean (batch means + delta method)
};

/// log of the mean of exp(values) with a batch-means standard error.
LogMeanEstimate log_mean_exp_batched(std::span<const double> values, int batches = 20);

/// SplitMix64 generator: cheap to seed, used for short per-item streams.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// One SplitMix64 output for the given input; a bijective 64-bit mixer.
inline std::uint64_t splitmix64(std::uint64_t x) { return SplitMix64(x)(); }

/// 64-bit FNV-1a hash of a string.
std::uint64_t fnv1a64(std::string_view text);

Vec sample_std_normal(Eigen::Index p, Rng& rng);
Vec sample_mvn(const Vec& mu, const Mat& cov, Rng& rng);
Vec sample_mvt(const Vec& mu, const Mat& scale, double df, Rng& rng);
/// Inverse-Wishart draw with scale matrix Psi and df degrees of freedom
/// (mean Psi / (df - p - 1)); requires df > p - 1.
Mat sample_inv_wishart(const Mat& scale, double df, Rng& rng);
/// Standard multivariate t_df(0, I_p) pivot.
Vec sample_std_t(Eigen::Index p, double df, Rng& rng);

/// Isotonic least-squares fit of 0/1 labels on score order. The returned
/// values are aligned with the input positions; tied scores share a value.
std::vector<double> pav_fit(std::span<const double> scores, std::span<const int> labels);

/// log det of a matrix that should be a positive-definite Gram product,
/// evaluated through a partially pivoted LU. Throws `code` when the
/// determinant is non-positive or below 1e-300.
double log_det_floored(const Mat& m, ErrorCode code, const char* what);

/// Symmetric part of a square matrix.
inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

}  // namespace fidfac
