#include "fidfac/core_stats.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace fidfac {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::InvalidDegreesOfFreedom: return "InvalidDegreesOfFreedom";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InsufficientReplication: return "InsufficientReplication";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::NonPositiveConcentration: return "NonPositiveConcentration";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::ChainInitializationFailed: return "ChainInitializationFailed";
    case ErrorCode::EmptyChain: return "EmptyChain";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

LowerTriFactor::LowerTriFactor(Mat factor) : factor_(std::move(factor)) {
  if (factor_.rows() != factor_.cols() || factor_.rows() == 0)
    throw Error(ErrorCode::InvalidArgument, "factor must be square and non-empty");
  for (Eigen::Index i = 0; i < factor_.rows(); ++i) {
    if (!(factor_(i, i) > 0) || !std::isfinite(factor_(i, i)))
      throw Error(ErrorCode::NotPositiveDefinite, "factor diagonal must be positive");
    for (Eigen::Index j = i + 1; j < factor_.cols(); ++j)
      if (factor_(i, j) != 0.0) throw Error(ErrorCode::InvalidArgument, "factor must be lower triangular");
  }
}

LowerTriFactor LowerTriFactor::from_unconstrained(std::span<const double> coords, Eigen::Index p) {
  if (static_cast<Eigen::Index>(coords.size()) != unconstrained_size(p))
    throw Error(ErrorCode::LengthMismatch, "unconstrained factor coordinates");
  Mat l = Mat::Zero(p, p);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < p; ++i) l(i, i) = std::exp(coords[k++]);
  for (Eigen::Index i = 1; i < p; ++i)
    for (Eigen::Index j = 0; j < i; ++j) l(i, j) = coords[k++];
  return LowerTriFactor(std::move(l));
}

void LowerTriFactor::to_unconstrained(std::span<double> out) const {
  const Eigen::Index p = dim();
  if (static_cast<Eigen::Index>(out.size()) != unconstrained_size(p))
    throw Error(ErrorCode::LengthMismatch, "unconstrained factor coordinates");
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < p; ++i) out[k++] = std::log(factor_(i, i));
  for (Eigen::Index i = 1; i < p; ++i)
    for (Eigen::Index j = 0; j < i; ++j) out[k++] = factor_(i, j);
}

LowerTriFactor chol_factor(const Mat& s) {
  if (s.rows() != s.cols() || s.rows() == 0) throw Error(ErrorCode::InvalidArgument, "chol_factor needs a square matrix");
  if (!s.allFinite()) throw Error(ErrorCode::NotPositiveDefinite, "non-finite matrix");
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "Cholesky pivot <= 0");
  Mat l = llt.matrixL();
  if (!(l.diagonal().array() > 0).all() || !l.allFinite())
    throw Error(ErrorCode::NotPositiveDefinite, "Cholesky pivot <= 0");
  return LowerTriFactor(std::move(l));
}

LowerTriFactor chol_with_jitter(const Mat& s) {
  try {
    return chol_factor(s);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
  }
  const double jitter = 1e-10 * s.trace() / static_cast<double>(s.rows());
  Mat bumped = s;
  bumped.diagonal().array() += jitter;
  return chol_factor(bumped);
}

Vec sample_std_normal(Eigen::Index p, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec z(p);
  for (Eigen::Index i = 0; i < p; ++i) z(i) = normal(rng);
  return z;
}

Vec sample_mvn(const Vec& mu, const Mat& cov, Rng& rng) {
  const LowerTriFactor l = chol_factor(cov);
  return mu + l.matrix() * sample_std_normal(mu.size(), rng);
}

Vec sample_std_t(Eigen::Index p, double df, Rng& rng) {
  if (!(df > 0)) throw Error(ErrorCode::InvalidDegreesOfFreedom, "t degrees of freedom must be positive");
  Vec z = sample_std_normal(p, rng);
  std::chi_squared_distribution<double> chi2(df);
  return z / std::sqrt(chi2(rng) / df);
}

Vec sample_mvt(const Vec& mu, const Mat& scale, double df, Rng& rng) {
  const LowerTriFactor l = chol_factor(scale);
  return mu + l.matrix() * sample_std_t(mu.size(), df, rng);
}

Mat sample_inv_wishart(const Mat& scale, double df, Rng& rng) {
  const Eigen::Index p = scale.rows();
  if (!(df > static_cast<double>(p) - 1.0))
    throw Error(ErrorCode::InvalidDegreesOfFreedom, "inverse-Wishart needs df > p - 1");
  // W ~ Wishart(scale^{-1}, df) by Bartlett; the draw is W^{-1}.
  const LowerTriFactor ls = chol_factor(scale);
  const Mat scale_inv = ls.matrix().transpose().triangularView<Eigen::Upper>().solve(
      ls.matrix().triangularView<Eigen::Lower>().solve(Mat::Identity(p, p)));
  const LowerTriFactor lw = chol_factor(symmetrize(scale_inv));
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat bartlett = Mat::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    std::chi_squared_distribution<double> chi2(df - static_cast<double>(i));
    bartlett(i, i) = std::sqrt(chi2(rng));
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = normal(rng);
  }
  const Mat t = lw.matrix() * bartlett;  // W = T T'
  const Mat t_inv = t.triangularView<Eigen::Lower>().solve(Mat::Identity(p, p));
  return symmetrize(t_inv.transpose() * t_inv);
}

std::vector<double> pav_fit(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "pav_fit scores and labels");
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "pav_fit of an empty list");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  struct Block {
    double sum;
    double weight;
    std::size_t first;  // index into order
    std::size_t last;   // one past
  };
  std::vector<Block> blocks;
  blocks.reserve(n);
  for (std::size_t k = 0; k < n;) {
    // tied scores start out pooled
    std::size_t e = k;
    double sum = 0.0;
    while (e < n && scores[order[e]] == scores[order[k]]) {
      const int lab = labels[order[e]];
      if (lab != 0 && lab != 1) throw Error(ErrorCode::InvalidArgument, "pav_fit labels must be 0 or 1");
      sum += lab;
      ++e;
    }
    blocks.push_back({sum, static_cast<double>(e - k), k, e});
    while (blocks.size() > 1) {
      Block& b = blocks[blocks.size() - 1];
      Block& a = blocks[blocks.size() - 2];
      if (a.sum / a.weight <= b.sum / b.weight) break;
      a.sum += b.sum;
      a.weight += b.weight;
      a.last = b.last;
      blocks.pop_back();
    }
    k = e;
  }
  std::vector<double> fitted(n);
  for (const Block& b : blocks)
    for (std::size_t k = b.first; k < b.last; ++k) fitted[order[k]] = b.sum / b.weight;
  return fitted;
}

double log_det_floored(const Mat& m, ErrorCode code, const char* what) {
  static const double kFloor = std::log(1e-300);
  Eigen::PartialPivLU<Mat> lu(m);
  const Mat& packed = lu.matrixLU();
  const double scale = packed.diagonal().cwiseAbs().maxCoeff();
  double log_abs = 0.0;
  int sign = static_cast<int>(lu.permutationP().determinant());
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    const double d = packed(i, i);
    if (!(std::abs(d) > 1e-13 * scale) || !std::isfinite(d)) throw Error(code, std::string(what) + " is singular");
    if (d < 0.0) sign = -sign;
    log_abs += std::log(std::abs(d));
  }
  if (sign < 0 || log_abs < kFloor) throw Error(code, std::string(what) + " is numerically singular");
  return log_abs;
}

LogMeanEstimate log_mean_exp_batched(std::span<const double> values, int batches) {
  if (values.empty()) throw Error(ErrorCode::EmptyChain, "no draws to average");
  LogMeanEstimate est;
  est.log_mean = log_mean_exp(values);
  const double hi = *std::max_element(values.begin(), values.end());
  const std::size_t n = values.size();
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(std::max(batches, 2)), n);
  const std::size_t size = n / b;
  if (b < 2 || size < 1 || !std::isfinite(hi)) return est;
  Vec means(static_cast<Eigen::Index>(b));
  for (std::size_t j = 0; j < b; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < size; ++k) acc += std::exp(values[j * size + k] - hi);
    means(static_cast<Eigen::Index>(j)) = acc / static_cast<double>(size);
  }
  const double centre = means.mean();
  const double var = (means.array() - centre).square().sum() / static_cast<double>(b - 1);
  const double se = std::sqrt(var / static_cast<double>(b));
  est.mc_se = centre > 0.0 ? se / centre : std::numeric_limits<double>::infinity();
  return est;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace fidfac
