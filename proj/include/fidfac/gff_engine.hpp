#pragma once

#include <span>
#include <string>
#include <vector>

#include "fidfac/data_model.hpp"

namespace fidfac {

/// Sum over the unknown rows of log N_p(y_j; center, L L').
class UnknownPanelLikelihood {
 public:
  explicit UnknownPanelLikelihood(const MeasurementPanel& unknown);

  double operator()(const Vec& center, const LowerTriFactor& chol) const;
  /// One value per pivot row t, with center base + B t.
  Vec batch(const Vec& base, const Mat& b, const Mat& pivots, const LowerTriFactor& chol) const;
  Eigen::Index count() const { return m_; }

 private:
  Eigen::Index m_;
  Vec mean_;
  Mat scatter_;  // centred
};

LogMeanEstimate gff_numerator(const std::vector<SpecificParams>& chain_s, const MeasurementPanel& unknown,
                              int batches = 20);

/// log (1/K) sum_k prod_j N_p(y_uj; mu_a + B t_k, CC') for the given pivots (K x p).
double unknown_source_marginal(const AlternativeParams& params, const MeasurementPanel& unknown, const Mat& pivots);
/// Same with K fresh T_tau(0, I) pivots.
double unknown_source_marginal(const AlternativeParams& params, const MeasurementPanel& unknown,
                               Eigen::Index n_importance, Rng& rng);

/// K x p matrix of standard multivariate t pivots.
Mat draw_t_pivots(Eigen::Index k, Eigen::Index p, double df, Rng& rng);

struct GffConfig {
  Eigen::Index n_importance = 4096;
  bool pooled = true;  // one pivot pool shared by all alternative draws
  double importance_df = 5.0;
  long denominator_stride = 5;  // every k-th alternative draw enters the denominator
  int batches = 20;
};

struct GffResult {
  double log10_gff = 0.0;
  double log_numerator = 0.0;
  double log_denominator = 0.0;
  double mc_se_num = 0.0;
  double mc_se_den = 0.0;
  std::size_t n_draws_s = 0;
  std::size_t n_draws_a = 0;
  Eigen::Index n_importance = 0;
  bool pooled = true;
};

GffResult compute_gff(const std::vector<SpecificParams>& chain_s, const std::vector<AlternativeParams>& chain_a,
                      const MeasurementPanel& unknown, const GffConfig& config, Rng& rng);

/// JSON record of all result fields plus the configuration.
std::string to_json(const GffResult& result, const GffConfig& config);

}  // namespace fidfac
