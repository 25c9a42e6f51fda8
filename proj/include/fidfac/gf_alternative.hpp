#pragma once

// Generalized fiducial density of the alternative-source random-effects model
//   y_ik = mu_a + B t_i + C v_ik,  t_i ~ T_5(0, I),  v_ik ~ N_p(0, I)
// with the source effects held at plug-in values t_i, and its sampler.

#include <iosfwd>
#include <vector>

#include "fidfac/data_model.hpp"
#include "fidfac/mcmc.hpp"

namespace fidfac {

/// Sums over all N rows, with each source's t_i repeated m_i times.
struct AlternativeSuffStats {
  Eigen::Index total = 0;  // N
  std::size_t n = 0;
  Vec sum_y;  // sum y
  Vec sum_t;  // sum m_i t_i
  Mat syy;    // sum y y'
  Mat sty;    // sum t_i y'
  Mat stt;    // sum m_i t_i t_i'

  static AlternativeSuffStats from(const AlternativeDataset& data, const std::vector<Vec>& t);
  Eigen::Index dim() const { return sum_y.size(); }
};

/// S_a = sum_ik (y_ik - mu - B t_i)(y_ik - mu - B t_i)'.
Mat a_scatter(const AlternativeDataset& data, const Vec& mu_a, const Mat& b, const std::vector<Vec>& t);
Mat a_scatter(const AlternativeSuffStats& stats, const Vec& mu_a, const Mat& b);

/// The unconjugated (p + 2p^2)-square block matrix built from N, W and Q.
Mat alternative_jacobian_block(const AlternativeSuffStats& stats, const Vec& mu_a, const Mat& b);

/// log J_a; `b` and `c` may be any p x p matrices, `c` nonsingular.
double log_jacobian_a(const AlternativeDataset& data, const Vec& mu_a, const Mat& b, const Mat& c,
                      const std::vector<Vec>& t);

double log_q_a(const AlternativeDataset& data, const AlternativeParams& params, const std::vector<Vec>& t);
double log_q_a(const AlternativeSuffStats& stats, const AlternativeParams& params);

/// Sampling target over (mu_a, log-Cholesky B, log-Cholesky C).
class GfAlternativeTarget {
 public:
  GfAlternativeTarget(const AlternativeDataset& data, const std::vector<Vec>& t_hats);

  Eigen::Index dim() const { return p_ + 2 * LowerTriFactor::unconstrained_size(p_); }
  Eigen::Index p() const { return p_; }
  AlternativeParams unpack(const Vec& x) const;
  Vec pack(const AlternativeParams& params) const;
  TargetValue operator()(const Vec& x) const;
  /// Coordinate groups: mu, B, C.
  BlockLayout blocks() const;

 private:
  AlternativeSuffStats stats_;
  Eigen::Index p_;
};

struct GfAlternativeChain {
  std::vector<AlternativeParams> draws;
  std::vector<long> iterations;
  Vec log_q;
  std::vector<Vec> t_hats;
  ChainDiagnostics diagnostics;
};

/// Plug-in start and source effects from the closed-form estimators.
struct AlternativeStart {
  AlternativeParams params;
  std::vector<Vec> t_hats;
};
AlternativeStart alternative_start(const AlternativeDataset& data);

GfAlternativeChain sample_gf_alternative(const AlternativeDataset& data, const std::vector<Vec>& t_hats,
                                         const AlternativeParams& start, const ChainConfig& config,
                                         const Vec& proposal_scales = Vec());
/// Convenience overload using alternative_start.
GfAlternativeChain sample_gf_alternative(const AlternativeDataset& data, const ChainConfig& config);

/// Columns: iter, mu_1..mu_p, b_11..b_pp, c_11..c_pp (row-major), log_q.
void write_alternative_chain_csv(std::ostream& out, const GfAlternativeChain& chain);

}  // namespace fidfac
