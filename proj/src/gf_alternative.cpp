#include "fidfac/gf_alternative.hpp"

#include <ostream>

#include "fidfac/csv_io.hpp"

namespace fidfac {

namespace {

double trace_inv_gram(const Mat& s, const Mat& l) {
  const auto tri = l.triangularView<Eigen::Lower>();
  const Mat x = tri.solve(s);
  return tri.solve(x.transpose()).trace();
}

void check_t(const AlternativeDataset& data, const std::vector<Vec>& t) {
  if (t.size() != data.n()) throw Error(ErrorCode::LengthMismatch, "one t_i per alternative source");
  for (const auto& ti : t)
    if (ti.size() != data.dim()) throw Error(ErrorCode::LengthMismatch, "t_i has the wrong length");
}

}  // namespace

AlternativeSuffStats AlternativeSuffStats::from(const AlternativeDataset& data, const std::vector<Vec>& t) {
  check_t(data, t);
  const Eigen::Index p = data.dim();
  AlternativeSuffStats s;
  s.n = data.n();
  s.total = data.total();
  s.sum_y = Vec::Zero(p);
  s.sum_t = Vec::Zero(p);
  s.syy = Mat::Zero(p, p);
  s.sty = Mat::Zero(p, p);
  s.stt = Mat::Zero(p, p);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const Mat& y = data.sources[i].rows;
    const double mi = static_cast<double>(y.rows());
    const Vec ysum = y.colwise().sum().transpose();
    s.sum_y += ysum;
    s.sum_t += mi * t[i];
    s.syy += y.transpose() * y;
    s.sty += t[i] * ysum.transpose();
    s.stt += mi * t[i] * t[i].transpose();
  }
  return s;
}

Mat a_scatter(const AlternativeDataset& data, const Vec& mu_a, const Mat& b, const std::vector<Vec>& t) {
  check_t(data, t);
  const Eigen::Index p = data.dim();
  Mat s = Mat::Zero(p, p);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const Vec center = mu_a + b * t[i];
    const Mat r = data.sources[i].rows.rowwise() - center.transpose();
    s += r.transpose() * r;
  }
  return s;
}

Mat a_scatter(const AlternativeSuffStats& stats, const Vec& mu_a, const Mat& b) {
  const double total = static_cast<double>(stats.total);
  const Mat yy = stats.syy - stats.sty.transpose() * b.transpose() - b * stats.sty + b * stats.stt * b.transpose();
  const Vec r = stats.sum_y - b * stats.sum_t;
  return symmetrize(yy - r * mu_a.transpose() - mu_a * r.transpose() + total * mu_a * mu_a.transpose());
}

Mat alternative_jacobian_block(const AlternativeSuffStats& stats, const Vec& mu_a, const Mat& b) {
  const Eigen::Index p = stats.dim();
  const double total = static_cast<double>(stats.total);
  const Vec one_q = stats.sum_y - total * mu_a - b * stats.sum_t;                       // Q'1
  const Mat wq = stats.sty - stats.sum_t * mu_a.transpose() - stats.stt * b.transpose();  // W'Q
  const Mat qq = a_scatter(stats, mu_a, b);
  const Eigen::Index ob = p, oc = p + p * p, d = p + 2 * p * p;
  Mat block = Mat::Zero(d, d);
  block.topLeftCorner(p, p) = total * Mat::Identity(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::Index bj = ob + j * p, cj = oc + j * p;
    block.block(j, bj, 1, p) = stats.sum_t.transpose();
    block.block(bj, j, p, 1) = stats.sum_t;
    block.block(j, cj, 1, p) = one_q.transpose();
    block.block(cj, j, p, 1) = one_q;
    block.block(bj, bj, p, p) = stats.stt;
    block.block(bj, cj, p, p) = wq;
    block.block(cj, bj, p, p) = wq.transpose();
    block.block(cj, cj, p, p) = qq;
  }
  return block;
}

double log_jacobian_a(const AlternativeDataset& data, const Vec& mu_a, const Mat& b, const Mat& c,
                      const std::vector<Vec>& t) {
  const Eigen::Index p = data.dim();
  if (mu_a.size() != p || b.rows() != p || b.cols() != p || c.rows() != p || c.cols() != p)
    throw Error(ErrorCode::LengthMismatch, "log_jacobian_a: dimensions disagree");
  Eigen::FullPivLU<Mat> lu(c);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularJacobian, "C is singular");
  const Mat c_inv = lu.inverse();
  const AlternativeSuffStats stats = AlternativeSuffStats::from(data, t);
  const Eigen::Index oc = p + p * p, d = p + 2 * p * p;
  Mat conj = Mat::Identity(d, d);
  for (Eigen::Index j = 0; j < p; ++j) conj.block(oc + j * p, oc + j * p, p, p) = c_inv;
  const Mat gram = conj * alternative_jacobian_block(stats, mu_a, b) * conj.transpose();
  return 0.5 * log_det_floored(gram, ErrorCode::SingularJacobian, "alternative Jacobian block") -
         0.5 * static_cast<double>(d) * std::log(static_cast<double>(stats.total));
}

double log_q_a(const AlternativeSuffStats& stats, const AlternativeParams& params) {
  const Eigen::Index p = stats.dim();
  if (params.mu.size() != p || params.b.dim() != p || params.c.dim() != p)
    throw Error(ErrorCode::LengthMismatch, "log_q_a: dimensions");
  const double total = static_cast<double>(stats.total);
  const double pd = static_cast<double>(p);
  const Mat& b = params.b.matrix();
  const double quad = trace_inv_gram(a_scatter(stats, params.mu, b), params.c.matrix());
  const double log_det_block = log_det_floored(alternative_jacobian_block(stats, params.mu, b),
                                               ErrorCode::SingularJacobian, "alternative Jacobian block");
  return -0.5 * pd * total * kLog2Pi - 0.5 * (total + pd) * params.c.log_det_gram() - 0.5 * quad +
         0.5 * log_det_block - 0.5 * (pd + 2.0 * pd * pd) * std::log(total);
}

double log_q_a(const AlternativeDataset& data, const AlternativeParams& params, const std::vector<Vec>& t) {
  return log_q_a(AlternativeSuffStats::from(data, t), params);
}

GfAlternativeTarget::GfAlternativeTarget(const AlternativeDataset& data, const std::vector<Vec>& t_hats)
    : stats_(AlternativeSuffStats::from(data, t_hats)), p_(data.dim()) {}

AlternativeParams GfAlternativeTarget::unpack(const Vec& x) const {
  const auto k = static_cast<std::size_t>(LowerTriFactor::unconstrained_size(p_));
  AlternativeParams params;
  params.mu = x.head(p_);
  params.b = LowerTriFactor::from_unconstrained(std::span<const double>(x.data() + p_, k), p_);
  params.c = LowerTriFactor::from_unconstrained(std::span<const double>(x.data() + p_ + k, k), p_);
  return params;
}

Vec GfAlternativeTarget::pack(const AlternativeParams& params) const {
  const auto k = static_cast<std::size_t>(LowerTriFactor::unconstrained_size(p_));
  Vec x(dim());
  x.head(p_) = params.mu;
  params.b.to_unconstrained(std::span<double>(x.data() + p_, k));
  params.c.to_unconstrained(std::span<double>(x.data() + p_ + k, k));
  return x;
}

BlockLayout GfAlternativeTarget::blocks() const {
  const int p = static_cast<int>(p_);
  const int k = static_cast<int>(LowerTriFactor::unconstrained_size(p_));
  BlockLayout out(3);
  for (int i = 0; i < p; ++i) out[0].push_back(i);
  for (int i = 0; i < k; ++i) out[1].push_back(p + i);
  for (int i = 0; i < k; ++i) out[2].push_back(p + k + i);
  return out;
}

TargetValue GfAlternativeTarget::operator()(const Vec& x) const {
  if (!x.allFinite()) return {};
  const AlternativeParams params = unpack(x);
  TargetValue v;
  v.log_q = log_q_a(stats_, params);
  double correction = 0.0;
  for (Eigen::Index i = 0; i < p_; ++i) {
    correction += std::log(params.b.matrix()(i, i));
    correction += static_cast<double>(p_ - i) * std::log(params.c.matrix()(i, i));
  }
  v.log_target = v.log_q + correction;
  return v;
}

AlternativeStart alternative_start(const AlternativeDataset& data) {
  data.validate();
  const AltEstimates est = estimate_alt_params(data);
  AlternativeStart start;
  start.params.mu = est.mu;
  try {
    start.params.b = chol_with_jitter(est.bbt);
    start.params.c = chol_with_jitter(est.cct);
  } catch (const Error& e) {
    throw Error(ErrorCode::ChainInitializationFailed, std::string("alternative start: ") + e.what());
  }
  start.t_hats = estimate_t_hats(data, est.mu, start.params.b, est.cct);
  return start;
}

GfAlternativeChain sample_gf_alternative(const AlternativeDataset& data, const std::vector<Vec>& t_hats,
                                         const AlternativeParams& start, const ChainConfig& config,
                                         const Vec& proposal_scales) {
  const GfAlternativeTarget target(data, t_hats);
  const Eigen::Index p = data.dim();
  const double total = static_cast<double>(data.total());

  Vec scales = proposal_scales;
  if (scales.size() == 0) {
    const AlternativeSuffStats stats = AlternativeSuffStats::from(data, t_hats);
    const Mat cct = start.c.gram();
    const Vec sd = cct.diagonal().cwiseSqrt();
    scales.resize(target.dim());
    scales.head(p) = sd / std::sqrt(total);
    Eigen::Index k = p;
    const auto coef_sd = [&](Eigen::Index i, Eigen::Index l) {
      return sd(i) / std::sqrt(std::max(stats.stt(l, l), 1e-12));
    };
    for (Eigen::Index i = 0; i < p; ++i) scales(k++) = coef_sd(i, i) / start.b.matrix()(i, i);
    for (Eigen::Index i = 1; i < p; ++i)
      for (Eigen::Index l = 0; l < i; ++l) scales(k++) = coef_sd(i, l);
    for (Eigen::Index i = 0; i < p; ++i) scales(k++) = 1.0 / std::sqrt(2.0 * total);
    for (Eigen::Index i = 1; i < p; ++i)
      for (Eigen::Index l = 0; l < i; ++l) scales(k++) = sd(i) / std::sqrt(2.0 * total);
    for (Eigen::Index i = 0; i < scales.size(); ++i)
      if (!(scales(i) > 0.0) || !std::isfinite(scales(i))) scales(i) = 1e-3;
  } else if (scales.size() != target.dim()) {
    throw Error(ErrorCode::LengthMismatch, "proposal_scales has the wrong length");
  }

  RwmhOutput out = run_adaptive_rwmh(target.pack(start), scales, target.blocks(), target, config);
  GfAlternativeChain chain;
  chain.draws.reserve(static_cast<std::size_t>(out.states.rows()));
  for (Eigen::Index r = 0; r < out.states.rows(); ++r) {
    AlternativeParams d = target.unpack(out.states.row(r).transpose());
    d.tau = start.tau;
    chain.draws.push_back(std::move(d));
  }
  chain.iterations = std::move(out.iterations);
  chain.log_q = std::move(out.log_q);
  chain.t_hats = t_hats;
  chain.diagnostics = std::move(out.diagnostics);
  return chain;
}

GfAlternativeChain sample_gf_alternative(const AlternativeDataset& data, const ChainConfig& config) {
  const AlternativeStart start = alternative_start(data);
  return sample_gf_alternative(data, start.t_hats, start.params, config);
}

void write_alternative_chain_csv(std::ostream& out, const GfAlternativeChain& chain) {
  const Eigen::Index p = chain.draws.empty() ? 0 : chain.draws.front().mu.size();
  out << "iter";
  for (Eigen::Index j = 0; j < p; ++j) out << ",mu_" << j + 1;
  for (const char* name : {"b", "c"})
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) out << ',' << name << '_' << i + 1 << j + 1;
  out << ",log_q\n";
  for (std::size_t r = 0; r < chain.draws.size(); ++r) {
    const auto& d = chain.draws[r];
    out << chain.iterations[r];
    for (Eigen::Index j = 0; j < p; ++j) out << ',' << format_double(d.mu(j));
    for (const Mat* m : {&d.b.matrix(), &d.c.matrix()})
      for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) out << ',' << format_double((*m)(i, j));
    out << ',' << format_double(chain.log_q(static_cast<Eigen::Index>(r))) << '\n';
  }
}

}  // namespace fidfac
