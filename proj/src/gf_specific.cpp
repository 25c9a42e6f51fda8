#include "fidfac/gf_specific.hpp"

#include <ostream>

#include "fidfac/csv_io.hpp"

namespace fidfac {

namespace {

// tr(S (L L')^{-1}) for lower-triangular L.
double trace_inv_gram(const Mat& s, const Mat& l) {
  const auto tri = l.triangularView<Eigen::Lower>();
  const Mat x = tri.solve(s);
  const Mat y = tri.solve(x.transpose());
  return y.trace();
}

}  // namespace

SpecificSuffStats SpecificSuffStats::from(const MeasurementPanel& panel) {
  SpecificSuffStats s;
  s.m = panel.count();
  s.sum = panel.rows.colwise().sum().transpose();
  s.cross = panel.rows.transpose() * panel.rows;
  return s;
}

Mat s_scatter(const MeasurementPanel& data, const Vec& mu_s) {
  if (data.dim() != mu_s.size()) throw Error(ErrorCode::LengthMismatch, "s_scatter: mu has wrong length");
  const Mat u = data.rows.rowwise() - mu_s.transpose();
  return u.transpose() * u;
}

Mat s_scatter(const SpecificSuffStats& stats, const Vec& mu_s) {
  const double m = static_cast<double>(stats.m);
  return symmetrize(stats.cross - stats.sum * mu_s.transpose() - mu_s * stats.sum.transpose() +
                    m * mu_s * mu_s.transpose());
}

Mat specific_jacobian_block(const SpecificSuffStats& stats, const Vec& mu_s) {
  const Eigen::Index p = stats.dim();
  const Vec col_sum = stats.sum - static_cast<double>(stats.m) * mu_s;  // U'1
  const Mat utu = s_scatter(stats, mu_s);
  const Eigen::Index d = p + p * p;
  Mat block = Mat::Zero(d, d);
  block.topLeftCorner(p, p) = static_cast<double>(stats.m) * Mat::Identity(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    block.block(j, p + j * p, 1, p) = col_sum.transpose();
    block.block(p + j * p, j, p, 1) = col_sum;
    block.block(p + j * p, p + j * p, p, p) = utu;
  }
  return block;
}

double log_jacobian_s(const MeasurementPanel& data, const Vec& mu_s, const Mat& a) {
  const Eigen::Index p = data.dim();
  if (a.rows() != p || a.cols() != p || mu_s.size() != p)
    throw Error(ErrorCode::LengthMismatch, "log_jacobian_s: dimensions disagree");
  Eigen::FullPivLU<Mat> lu(a);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularJacobian, "A is singular");
  const Mat a_inv = lu.inverse();
  const SpecificSuffStats stats = SpecificSuffStats::from(data);
  const Eigen::Index d = p + p * p;
  Mat conj = Mat::Identity(d, d);
  for (Eigen::Index j = 0; j < p; ++j) conj.block(p + j * p, p + j * p, p, p) = a_inv;
  const Mat gram = conj * specific_jacobian_block(stats, mu_s) * conj.transpose();
  const double m = static_cast<double>(stats.m);
  return 0.5 * log_det_floored(gram, ErrorCode::SingularJacobian, "specific Jacobian block") -
         0.5 * static_cast<double>(p + p * p) * std::log(m);
}

double log_q_s(const SpecificSuffStats& stats, const SpecificParams& params) {
  const Eigen::Index p = stats.dim();
  if (params.mu.size() != p || params.a.dim() != p) throw Error(ErrorCode::LengthMismatch, "log_q_s: dimensions");
  if (stats.m < 2) throw Error(ErrorCode::SingularJacobian, "q_s needs m >= 2");
  const double m = static_cast<double>(stats.m);
  const double pd = static_cast<double>(p);
  const Mat& l = params.a.matrix();
  const double log_det_aat = params.a.log_det_gram();
  const double quad = trace_inv_gram(s_scatter(stats, params.mu), l);
  const double log_det_block =
      log_det_floored(specific_jacobian_block(stats, params.mu), ErrorCode::SingularJacobian, "specific Jacobian block");
  return -0.5 * m * pd * kLog2Pi - 0.5 * (m + pd) * log_det_aat - 0.5 * quad + 0.5 * log_det_block -
         0.5 * (pd + pd * pd) * std::log(m);
}

double log_q_s(const MeasurementPanel& data, const SpecificParams& params) {
  return log_q_s(SpecificSuffStats::from(data), params);
}

GfSpecificTarget::GfSpecificTarget(const MeasurementPanel& data)
    : stats_(SpecificSuffStats::from(data)), p_(data.dim()) {}

SpecificParams GfSpecificTarget::unpack(const Vec& x) const {
  const std::span<const double> tail(x.data() + p_, static_cast<std::size_t>(LowerTriFactor::unconstrained_size(p_)));
  return {x.head(p_), LowerTriFactor::from_unconstrained(tail, p_)};
}

Vec GfSpecificTarget::pack(const SpecificParams& params) const {
  Vec x(dim());
  x.head(p_) = params.mu;
  params.a.to_unconstrained(std::span<double>(x.data() + p_, static_cast<std::size_t>(dim() - p_)));
  return x;
}

TargetValue GfSpecificTarget::operator()(const Vec& x) const {
  if (!x.allFinite()) return {};
  const SpecificParams params = unpack(x);
  TargetValue v;
  v.log_q = log_q_s(stats_, params);
  // density of AA' carried to log-Cholesky coordinates
  double correction = 0.0;
  for (Eigen::Index i = 0; i < p_; ++i)
    correction += static_cast<double>(p_ - i) * std::log(params.a.matrix()(i, i));
  v.log_target = v.log_q + correction;
  return v;
}

GfSpecificChain sample_gf_specific(const MeasurementPanel& data, const ChainConfig& config,
                                   const Vec& proposal_scales) {
  data.validate();
  const SpecificEstimates est = estimate_specific_params(data);
  const GfSpecificTarget target(data);
  const Eigen::Index p = data.dim();
  const double m = static_cast<double>(data.count());

  SpecificParams start;
  start.mu = est.mu;
  try {
    start.a = chol_with_jitter(est.aat);
  } catch (const Error& e) {
    throw Error(ErrorCode::ChainInitializationFailed, std::string("specific start: ") + e.what());
  }

  Vec scales = proposal_scales;
  if (scales.size() == 0) {
    scales.resize(target.dim());
    const Vec sd = est.aat.diagonal().cwiseSqrt();
    scales.head(p) = sd / std::sqrt(m);
    Eigen::Index k = p;
    for (Eigen::Index i = 0; i < p; ++i) scales(k++) = 1.0 / std::sqrt(2.0 * m);
    for (Eigen::Index i = 1; i < p; ++i)
      for (Eigen::Index j = 0; j < i; ++j) scales(k++) = sd(i) / std::sqrt(2.0 * m);
    for (Eigen::Index i = 0; i < scales.size(); ++i)
      if (!(scales(i) > 0.0) || !std::isfinite(scales(i))) scales(i) = 1e-3;
  } else if (scales.size() != target.dim()) {
    throw Error(ErrorCode::LengthMismatch, "proposal_scales has the wrong length");
  }

  RwmhOutput out = run_adaptive_rwmh(target.pack(start), scales, componentwise_blocks(static_cast<int>(target.dim())),
                                     target, config);
  GfSpecificChain chain;
  chain.draws.reserve(static_cast<std::size_t>(out.states.rows()));
  for (Eigen::Index r = 0; r < out.states.rows(); ++r) chain.draws.push_back(target.unpack(out.states.row(r).transpose()));
  chain.iterations = std::move(out.iterations);
  chain.log_q = std::move(out.log_q);
  chain.diagnostics = std::move(out.diagnostics);
  return chain;
}

void write_specific_chain_csv(std::ostream& out, const GfSpecificChain& chain) {
  const Eigen::Index p = chain.draws.empty() ? 0 : chain.draws.front().mu.size();
  out << "iter";
  for (Eigen::Index j = 0; j < p; ++j) out << ",mu_" << j + 1;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) out << ",a_" << i + 1 << j + 1;
  out << ",log_q\n";
  for (std::size_t r = 0; r < chain.draws.size(); ++r) {
    const auto& d = chain.draws[r];
    out << chain.iterations[r];
    for (Eigen::Index j = 0; j < p; ++j) out << ',' << format_double(d.mu(j));
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) out << ',' << format_double(d.a.matrix()(i, j));
    out << ',' << format_double(chain.log_q(static_cast<Eigen::Index>(r))) << '\n';
  }
}

}  // namespace fidfac
