#include "fidfac/gff_engine.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

namespace fidfac {

UnknownPanelLikelihood::UnknownPanelLikelihood(const MeasurementPanel& unknown) : m_(unknown.count()) {
  if (m_ < 1) throw Error(ErrorCode::EmptyInput, "unknown panel has no rows");
  mean_ = unknown.mean();
  const Mat centred = unknown.rows.rowwise() - mean_.transpose();
  scatter_ = centred.transpose() * centred;
}

double UnknownPanelLikelihood::operator()(const Vec& center, const LowerTriFactor& chol) const {
  return batch(center, Mat::Zero(center.size(), center.size()), Mat::Zero(1, center.size()), chol)(0);
}

Vec UnknownPanelLikelihood::batch(const Vec& base, const Mat& b, const Mat& pivots, const LowerTriFactor& chol) const {
  const Eigen::Index p = mean_.size();
  const double m = static_cast<double>(m_);
  const auto tri = chol.matrix().triangularView<Eigen::Lower>();
  const Mat x = tri.solve(scatter_);
  const double within = tri.solve(x.transpose()).trace();
  const double constant = -0.5 * m * static_cast<double>(p) * kLog2Pi - 0.5 * m * chol.log_det_gram() - 0.5 * within;
  const Vec d0 = tri.solve(mean_ - base);
  const Mat g = tri.solve(b);
  const Mat d = (-g * pivots.transpose()).colwise() + d0;
  return (constant - 0.5 * m * d.colwise().squaredNorm().array()).matrix().transpose();
}

LogMeanEstimate gff_numerator(const std::vector<SpecificParams>& chain_s, const MeasurementPanel& unknown,
                              int batches) {
  if (chain_s.empty()) throw Error(ErrorCode::EmptyChain, "specific chain is empty");
  const UnknownPanelLikelihood lik(unknown);
  std::vector<double> values;
  values.reserve(chain_s.size());
  for (const auto& d : chain_s) values.push_back(lik(d.mu, d.a));
  return log_mean_exp_batched(values, batches);
}

Mat draw_t_pivots(Eigen::Index k, Eigen::Index p, double df, Rng& rng) {
  Mat t(k, p);
  for (Eigen::Index i = 0; i < k; ++i) t.row(i) = sample_std_t(p, df, rng).transpose();
  return t;
}

double unknown_source_marginal(const AlternativeParams& params, const MeasurementPanel& unknown, const Mat& pivots) {
  if (pivots.rows() < 1) throw Error(ErrorCode::InvalidArgument, "need at least one importance pivot");
  const UnknownPanelLikelihood lik(unknown);
  const Vec values = lik.batch(params.mu, params.b.matrix(), pivots, params.c);
  return log_mean_exp(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

double unknown_source_marginal(const AlternativeParams& params, const MeasurementPanel& unknown,
                               Eigen::Index n_importance, Rng& rng) {
  if (n_importance < 1) throw Error(ErrorCode::InvalidArgument, "n_importance must be >= 1");
  return unknown_source_marginal(params, unknown, draw_t_pivots(n_importance, params.mu.size(), params.tau, rng));
}

GffResult compute_gff(const std::vector<SpecificParams>& chain_s, const std::vector<AlternativeParams>& chain_a,
                      const MeasurementPanel& unknown, const GffConfig& config, Rng& rng) {
  if (chain_s.empty() || chain_a.empty()) throw Error(ErrorCode::EmptyChain, "GFF needs two non-empty chains");
  if (config.n_importance < 1 || config.denominator_stride < 1)
    throw Error(ErrorCode::InvalidArgument, "n_importance and denominator_stride must be >= 1");
  const LogMeanEstimate num = gff_numerator(chain_s, unknown, config.batches);

  const UnknownPanelLikelihood lik(unknown);
  const Eigen::Index p = unknown.dim();
  Mat pool;
  if (config.pooled) pool = draw_t_pivots(config.n_importance, p, config.importance_df, rng);
  std::vector<double> den_values;
  for (std::size_t r = 0; r < chain_a.size(); r += static_cast<std::size_t>(config.denominator_stride)) {
    const AlternativeParams& d = chain_a[r];
    if (!config.pooled) pool = draw_t_pivots(config.n_importance, p, config.importance_df, rng);
    const Vec values = lik.batch(d.mu, d.b.matrix(), pool, d.c);
    den_values.push_back(log_mean_exp(std::span<const double>(values.data(), static_cast<std::size_t>(values.size()))));
  }
  const LogMeanEstimate den = log_mean_exp_batched(den_values, config.batches);

  GffResult res;
  res.log_numerator = num.log_mean;
  res.log_denominator = den.log_mean;
  res.mc_se_num = num.mc_se;
  res.mc_se_den = den.mc_se;
  res.log10_gff = (num.log_mean - den.log_mean) / kLn10;
  res.n_draws_s = chain_s.size();
  res.n_draws_a = den_values.size();
  res.n_importance = config.n_importance;
  res.pooled = config.pooled;
  return res;
}

std::string to_json(const GffResult& r, const GffConfig& c) {
  nlohmann::ordered_json j;
  j["log10_gff"] = r.log10_gff;
  j["log_numerator"] = r.log_numerator;
  j["log_denominator"] = r.log_denominator;
  j["mc_se_num"] = r.mc_se_num;
  j["mc_se_den"] = r.mc_se_den;
  j["n_draws_s"] = r.n_draws_s;
  j["n_draws_a"] = r.n_draws_a;
  j["n_importance"] = r.n_importance;
  j["pooled"] = r.pooled;
  j["config"] = {{"n_importance", c.n_importance},
                 {"pooled", c.pooled},
                 {"importance_df", c.importance_df},
                 {"denominator_stride", c.denominator_stride},
                 {"batches", c.batches}};
  return j.dump(2);
}

}  // namespace fidfac
