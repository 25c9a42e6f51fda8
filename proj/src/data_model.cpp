#include "fidfac/data_model.hpp"

#include <algorithm>
#include <numeric>

namespace fidfac {

void MeasurementPanel::validate() const {
  if (rows.rows() < 1 || rows.cols() < 1)
    throw Error(ErrorCode::SchemaError, "panel '" + source_id + "' is empty");
  if (!rows.allFinite()) throw Error(ErrorCode::SchemaError, "panel '" + source_id + "' has non-finite entries");
}

Eigen::Index AlternativeDataset::total() const {
  Eigen::Index n = 0;
  for (const auto& s : sources) n += s.count();
  return n;
}

std::vector<Eigen::Index> AlternativeDataset::counts() const {
  std::vector<Eigen::Index> out;
  out.reserve(sources.size());
  for (const auto& s : sources) out.push_back(s.count());
  return out;
}

void AlternativeDataset::validate() const {
  if (sources.size() < 2) throw Error(ErrorCode::InsufficientReplication, "alternative data needs n >= 2 sources");
  for (const auto& s : sources) {
    s.validate();
    if (s.dim() != dim()) throw Error(ErrorCode::LengthMismatch, "alternative sources disagree on p");
  }
}

void CaseBundle::validate() const {
  specific.validate();
  alternative.validate();
  if (unknown.count() > 0) {
    unknown.validate();
    if (unknown.dim() != specific.dim()) throw Error(ErrorCode::LengthMismatch, "unknown panel p differs");
  }
  if (alternative.dim() != specific.dim()) throw Error(ErrorCode::LengthMismatch, "alternative panel p differs");
}

MeasurementPanel generate_specific_from_pivots(const SpecificParams& params, const Mat& pivots) {
  MeasurementPanel panel;
  panel.source_id = "specific";
  panel.rows = (pivots * params.a.matrix().transpose()).rowwise() + params.mu.transpose();
  return panel;
}

MeasurementPanel generate_specific(const SpecificParams& params, Eigen::Index m, Rng& rng) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "generate_specific needs m >= 1");
  const Eigen::Index p = params.mu.size();
  Mat z(m, p);
  for (Eigen::Index k = 0; k < m; ++k) z.row(k) = sample_std_normal(p, rng).transpose();
  return generate_specific_from_pivots(params, z);
}

AlternativeDataset generate_alternative_from_pivots(const AlternativeParams& params, const Mat& t,
                                                    const std::vector<Mat>& v) {
  if (static_cast<std::size_t>(t.rows()) != v.size())
    throw Error(ErrorCode::LengthMismatch, "one t pivot per source");
  AlternativeDataset data;
  data.sources.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec center = params.mu + params.b.matrix() * t.row(static_cast<Eigen::Index>(i)).transpose();
    MeasurementPanel panel;
    panel.source_id = "alt" + std::to_string(i + 1);
    panel.rows = (v[i] * params.c.matrix().transpose()).rowwise() + center.transpose();
    data.sources.push_back(std::move(panel));
  }
  return data;
}

AlternativeDataset generate_alternative(const AlternativeParams& params, const std::vector<Eigen::Index>& counts,
                                        Rng& rng) {
  if (counts.empty()) throw Error(ErrorCode::InvalidArgument, "generate_alternative needs n >= 1");
  const Eigen::Index p = params.mu.size();
  Mat t(static_cast<Eigen::Index>(counts.size()), p);
  std::vector<Mat> v;
  v.reserve(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 1) throw Error(ErrorCode::InvalidArgument, "every source needs m_i >= 1");
    t.row(static_cast<Eigen::Index>(i)) = sample_std_t(p, params.tau, rng).transpose();
    Mat vi(counts[i], p);
    for (Eigen::Index k = 0; k < counts[i]; ++k) vi.row(k) = sample_std_normal(p, rng).transpose();
    v.push_back(std::move(vi));
  }
  return generate_alternative_from_pivots(params, t, v);
}

AlternativeDataset generate_alternative(const AlternativeParams& params, std::size_t n, Eigen::Index m_each,
                                        Rng& rng) {
  return generate_alternative(params, std::vector<Eigen::Index>(n, m_each), rng);
}

MeasurementPanel generate_alternative_source(const AlternativeParams& params, Eigen::Index m, Rng& rng,
                                             std::string source_id) {
  AlternativeDataset one = generate_alternative(params, std::vector<Eigen::Index>{m}, rng);
  MeasurementPanel panel = std::move(one.sources.front());
  panel.source_id = std::move(source_id);
  return panel;
}

AlternativeDataset generate_alternative_gaussian(const Vec& mu, const Mat& bbt, const Mat& cct,
                                                 const std::vector<Eigen::Index>& counts, Rng& rng) {
  const Mat lb = chol_with_jitter(bbt).matrix();
  const Mat lc = chol_factor(cct).matrix();
  const Eigen::Index p = mu.size();
  AlternativeDataset data;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const Vec center = mu + lb * sample_std_normal(p, rng);
    MeasurementPanel panel;
    panel.source_id = "alt" + std::to_string(i + 1);
    panel.rows.resize(counts[i], p);
    for (Eigen::Index k = 0; k < counts[i]; ++k)
      panel.rows.row(k) = (center + lc * sample_std_normal(p, rng)).transpose();
    data.sources.push_back(std::move(panel));
  }
  return data;
}

double re_source_loglik(const MeasurementPanel& panel, const Vec& mu, const Mat& bbt, const Mat& cct) {
  const Eigen::Index p = panel.dim();
  if (mu.size() != p || bbt.rows() != p || cct.rows() != p)
    throw Error(ErrorCode::LengthMismatch, "re_source_loglik: dimensions disagree");
  const double m = static_cast<double>(panel.count());
  const LowerTriFactor lc = chol_factor(symmetrize(cct));
  const LowerTriFactor lt = chol_factor(symmetrize(cct + m * bbt));
  const Vec mean = panel.mean();
  const Mat centred = panel.rows.rowwise() - mean.transpose();
  const auto c_tri = lc.matrix().triangularView<Eigen::Lower>();
  const Mat x = c_tri.solve(centred.transpose());
  const Vec z = lt.matrix().triangularView<Eigen::Lower>().solve(mean - mu);
  return -0.5 * m * static_cast<double>(p) * kLog2Pi - 0.5 * (m - 1.0) * lc.log_det_gram() -
         0.5 * lt.log_det_gram() - 0.5 * x.squaredNorm() - 0.5 * m * z.squaredNorm();
}

AltEstimates estimate_alt_params(const AlternativeDataset& data) {
  const std::size_t n = data.n();
  const Eigen::Index total = data.total();
  if (n < 2) throw Error(ErrorCode::InsufficientReplication, "between-source scatter needs n >= 2");
  if (total - 1 <= 0) throw Error(ErrorCode::InsufficientReplication, "within-source scatter needs N >= 2");
  const Eigen::Index p = data.dim();

  AltEstimates est;
  est.mu = Vec::Zero(p);
  for (const auto& s : data.sources) est.mu += s.rows.colwise().sum().transpose();
  est.mu /= static_cast<double>(total);

  est.bbt = Mat::Zero(p, p);
  est.cct = Mat::Zero(p, p);
  Eigen::Index within_dof = 0;
  for (const auto& s : data.sources) {
    const Vec mean = s.mean();
    const Vec d = mean - est.mu;
    est.bbt += d * d.transpose();
    const Mat centered = s.rows.rowwise() - mean.transpose();
    est.cct += centered.transpose() * centered;
    within_dof += s.count() - 1;
  }
  if (within_dof <= 0)
    throw Error(ErrorCode::InsufficientReplication, "within-source scatter needs some source with m_i >= 2");
  est.bbt /= static_cast<double>(n - 1);
  est.cct /= static_cast<double>(total - 1);
  return est;
}

std::vector<Vec> estimate_t_hats(const AlternativeDataset& data, const Vec& mu_hat, const LowerTriFactor& b_hat,
                                 const Mat& cct_hat) {
  Eigen::LLT<Mat> cct(cct_hat);
  if (cct.info() != Eigen::Success) throw Error(ErrorCode::SingularDesign, "CC' estimate is not positive definite");
  const Mat& b = b_hat.matrix();
  const Mat weighted = cct.solve(b);  // (CC')^{-1} B
  const Mat normal = b.transpose() * weighted;
  Eigen::FullPivLU<Mat> lu(normal);
  if (lu.rank() < normal.rows()) throw Error(ErrorCode::SingularDesign, "B'(CC')^{-1}B is singular");
  const Mat projector = lu.solve(weighted.transpose());  // (B'S^-1 B)^-1 B' S^-1
  std::vector<Vec> t;
  t.reserve(data.n());
  for (const auto& s : data.sources) t.push_back(projector * (s.mean() - mu_hat));
  return t;
}

SpecificEstimates estimate_specific_params(const MeasurementPanel& panel) {
  const Eigen::Index m = panel.count();
  if (m < 2) throw Error(ErrorCode::InsufficientReplication, "specific-source scatter needs m >= 2");
  SpecificEstimates est;
  est.mu = panel.mean();
  const Mat centered = panel.rows.rowwise() - est.mu.transpose();
  est.aat = centered.transpose() * centered / static_cast<double>(m - 1);
  return est;
}

Vec unit_norm_spread(const Mat& table) {
  const Eigen::Index n = table.rows();
  Vec spread(table.cols());
  for (Eigen::Index j = 0; j < table.cols(); ++j) {
    const double norm = table.col(j).norm();
    if (norm == 0.0 || n < 2) {
      spread(j) = 0.0;
      continue;
    }
    const Vec scaled = table.col(j) / norm;
    const double mean = scaled.mean();
    spread(j) = std::sqrt((scaled.array() - mean).square().sum() / static_cast<double>(n - 1));
  }
  return spread;
}

std::vector<int> preprocess_select_elements(const Mat& table, int p) {
  const int q = static_cast<int>(table.cols());
  if (p < 1 || p > q) throw Error(ErrorCode::InvalidArgument, "element screening needs 1 <= p <= q");
  const Vec spread = unit_norm_spread(table);
  std::vector<int> order(static_cast<std::size_t>(q));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return spread(a) > spread(b); });
  std::vector<int> chosen(order.begin(), order.begin() + p);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

MeasurementPanel select_columns(const MeasurementPanel& panel, const std::vector<int>& columns) {
  MeasurementPanel out;
  out.source_id = panel.source_id;
  out.rows.resize(panel.count(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    out.rows.col(static_cast<Eigen::Index>(j)) = panel.rows.col(columns[j]);
  return out;
}

AlternativeDataset select_columns(const AlternativeDataset& data, const std::vector<int>& columns) {
  AlternativeDataset out;
  out.sources.reserve(data.n());
  for (const auto& s : data.sources) out.sources.push_back(select_columns(s, columns));
  return out;
}

Mat stack_rows(const AlternativeDataset& data) {
  Mat all(data.total(), data.dim());
  Eigen::Index r = 0;
  for (const auto& s : data.sources) {
    all.middleRows(r, s.count()) = s.rows;
    r += s.count();
  }
  return all;
}

}  // namespace fidfac
