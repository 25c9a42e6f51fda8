#pragma once

// Generalized fiducial density of the specific-source model
//   y_k = mu_s + A z_k,  z_k ~ N_p(0, I),  k = 1..m
// and a random-walk sampler for it.

#include <iosfwd>
#include <vector>

#include "fidfac/data_model.hpp"
#include "fidfac/mcmc.hpp"

namespace fidfac {

/// First and second raw moments of a panel; enough to evaluate q_s.
struct SpecificSuffStats {
  Eigen::Index m = 0;
  Vec sum;    // sum_k y_k
  Mat cross;  // sum_k y_k y_k'

  static SpecificSuffStats from(const MeasurementPanel& panel);
  Eigen::Index dim() const { return sum.size(); }
};

/// S_s = sum_k (y_k - mu)(y_k - mu)'.
Mat s_scatter(const MeasurementPanel& data, const Vec& mu_s);
Mat s_scatter(const SpecificSuffStats& stats, const Vec& mu_s);

/// The unconjugated (p + p^2)-square block matrix
/// [[m I, I (x) 1'U], [I (x) U'1, I (x) U'U]] with U_k = y_k - mu.
Mat specific_jacobian_block(const SpecificSuffStats& stats, const Vec& mu_s);

/// log J_s. `a` may be any nonsingular p x p matrix.
double log_jacobian_s(const MeasurementPanel& data, const Vec& mu_s, const Mat& a);

double log_q_s(const MeasurementPanel& data, const SpecificParams& params);
double log_q_s(const SpecificSuffStats& stats, const SpecificParams& params);

/// Sampling target over (mu_s, log-diagonal of A, sub-diagonal of A).
class GfSpecificTarget {
 public:
  explicit GfSpecificTarget(const MeasurementPanel& data);

  Eigen::Index dim() const { return p_ + LowerTriFactor::unconstrained_size(p_); }
  Eigen::Index p() const { return p_; }
  SpecificParams unpack(const Vec& x) const;
  Vec pack(const SpecificParams& params) const;
  TargetValue operator()(const Vec& x) const;

 private:
  SpecificSuffStats stats_;
  Eigen::Index p_;
};

struct GfSpecificChain {
  std::vector<SpecificParams> draws;
  std::vector<long> iterations;
  Vec log_q;
  ChainDiagnostics diagnostics;
};

/// `proposal_scales` (length p + p(p+1)/2) overrides the data-driven defaults.
GfSpecificChain sample_gf_specific(const MeasurementPanel& data, const ChainConfig& config,
                                   const Vec& proposal_scales = Vec());

/// Columns: iter, mu_1..mu_p, a_11..a_pp (row-major), log_q.
void write_specific_chain_csv(std::ostream& out, const GfSpecificChain& chain);

}  // namespace fidfac
