#include "fidfac/diagnostics.hpp"

#include <algorithm>
#include <numeric>

namespace fidfac {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// log2(1 + exp(x)) without overflow.
double log2_softplus(double x) {
  if (x == kInf) return kInf;
  if (x == -kInf) return 0.0;
  return (std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)))) / std::numbers::ln2;
}

std::vector<double> resample(const std::vector<double>& x, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  std::vector<double> out(x.size());
  for (auto& v : out) v = x[pick(rng)];
  return out;
}

double sample_sd(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

}  // namespace

void ScoreBatch::validate() const {
  if (hp.empty() || hd.empty()) throw Error(ErrorCode::EmptyClass, "score batch '" + method + "' has an empty class");
  for (const auto* list : {&hp, &hd})
    for (double v : *list)
      if (std::isnan(v)) throw Error(ErrorCode::InvalidArgument, "score batch '" + method + "' contains NaN");
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "quantile of an empty list");
  std::sort(values.begin(), values.end());
  const double pos = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double w = pos - static_cast<double>(lo);
  const double a = values[lo], b = values[hi];
  if (a == b || w == 0.0) return a;
  if (a == -kInf) return a;
  if (b == kInf) return b;
  return a + w * (b - a);
}

double empirical_auc(const ScoreBatch& batch) {
  batch.validate();
  const std::size_t np = batch.hp.size(), nd = batch.hd.size();
  std::vector<std::pair<double, int>> all;
  all.reserve(np + nd);
  for (double v : batch.hp) all.emplace_back(v, 1);
  for (double v : batch.hd) all.emplace_back(v, 0);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second == 1) rank_sum += midrank;
    i = j;
  }
  const double dp = static_cast<double>(np), dd = static_cast<double>(nd);
  return (rank_sum - dp * (dp + 1.0) / 2.0) / (dp * dd);
}

std::vector<double> auc_distribution(const ScoreBatch& batch, int n_resamples, Rng& rng) {
  batch.validate();
  if (n_resamples < 1) throw Error(ErrorCode::InvalidArgument, "n_resamples must be >= 1");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_resamples));
  for (int r = 0; r < n_resamples; ++r) {
    ScoreBatch b{resample(batch.hp, rng), resample(batch.hd, rng), batch.method};
    out.push_back(empirical_auc(b));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Kde::Kde(std::vector<double> sample) : x_(std::move(sample)) {
  if (x_.empty()) throw Error(ErrorCode::EmptyClass, "KDE of an empty sample");
  const double sd = sample_sd(x_);
  const double iqr = quantile(x_, 0.75) - quantile(x_, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  h_ = 0.9 * spread * std::pow(static_cast<double>(x_.size()), -0.2);
  if (!(h_ > 1e-6) || !std::isfinite(h_)) h_ = 1e-6;
}

double Kde::local_count(double v) const {
  double acc = 0.0;
  for (double x : x_) {
    const double z = (v - x) / h_;
    acc += std::exp(-0.5 * z * z);
  }
  return acc;
}

double Kde::density(double v) const {
  return local_count(v) * kInvSqrt2Pi / (h_ * static_cast<double>(x_.size()));
}

DiscrepancyValue discrepancy_at(const Kde& hp, const Kde& hd, double v, double min_local_count) {
  const double cp = hp.local_count(v), cd = hd.local_count(v);
  const bool miss_p = cp < min_local_count, miss_d = cd < min_local_count;
  const auto dens = [&](const Kde& k, double count) {
    return count * kInvSqrt2Pi / (k.bandwidth() * static_cast<double>(k.size()));
  };
  const double fp = dens(hp, miss_p ? min_local_count : cp);
  const double fd = dens(hd, miss_d ? min_local_count : cd);
  const double value = std::log10(fp / fd) - v;
  return {miss_p ? -kInf : value, value, miss_d ? kInf : value};
}

CalibrationCurve calibration_discrepancy(const ScoreBatch& batch, const CalibrationConfig& config, Rng& rng) {
  batch.validate();
  if (batch.hp.size() < 20 || batch.hd.size() < 20)
    throw Error(ErrorCode::InsufficientData, "calibration needs >= 20 scores per class");
  if (config.grid_size < 2 || config.n_boot < 2) throw Error(ErrorCode::InvalidArgument, "grid_size and n_boot >= 2");
  std::vector<double> finite;
  for (const auto* list : {&batch.hp, &batch.hd})
    for (double v : *list)
      if (std::isfinite(v)) finite.push_back(v);
  if (finite.size() < 2) throw Error(ErrorCode::InsufficientData, "too few finite scores");
  const double g_lo = quantile(finite, 0.05), g_hi = quantile(finite, 0.95);
  const Eigen::Index g = config.grid_size;
  CalibrationCurve curve;
  curve.grid = Vec::LinSpaced(g, g_lo, g_hi);

  const auto finite_only = [](const std::vector<double>& x) {
    std::vector<double> out;
    for (double v : x)
      if (std::isfinite(v)) out.push_back(v);
    return out;
  };
  const auto b = static_cast<std::size_t>(config.n_boot);
  Mat lo(g, static_cast<Eigen::Index>(b)), pt(g, static_cast<Eigen::Index>(b)), hi(g, static_cast<Eigen::Index>(b));
  for (std::size_t r = 0; r < b; ++r) {
    std::vector<double> rp = finite_only(resample(batch.hp, rng));
    std::vector<double> rd = finite_only(resample(batch.hd, rng));
    if (rp.empty()) rp.push_back(-1e300);
    if (rd.empty()) rd.push_back(1e300);
    const Kde kp(std::move(rp)), kd(std::move(rd));
    for (Eigen::Index i = 0; i < g; ++i) {
      const DiscrepancyValue d = discrepancy_at(kp, kd, curve.grid(i), config.min_local_count);
      lo(i, static_cast<Eigen::Index>(r)) = d.lo;
      pt(i, static_cast<Eigen::Index>(r)) = d.point;
      hi(i, static_cast<Eigen::Index>(r)) = d.hi;
    }
  }

  const double alpha = 1.0 - config.level;
  curve.median.resize(g);
  curve.pointwise_lo.resize(g);
  curve.pointwise_hi.resize(g);
  Vec scale(g);
  for (Eigen::Index i = 0; i < g; ++i) {
    std::vector<double> vl(b), vp(b), vh(b);
    for (std::size_t r = 0; r < b; ++r) {
      vl[r] = lo(i, static_cast<Eigen::Index>(r));
      vp[r] = pt(i, static_cast<Eigen::Index>(r));
      vh[r] = hi(i, static_cast<Eigen::Index>(r));
    }
    curve.median(i) = quantile(vp, 0.5);
    curve.pointwise_lo(i) = quantile(vl, alpha / 2.0);
    curve.pointwise_hi(i) = quantile(vh, 1.0 - alpha / 2.0);
    scale(i) = (quantile(vp, 0.75) - quantile(vp, 0.25)) / 1.349;
  }

  std::vector<double> sup(b, 0.0);
  for (std::size_t r = 0; r < b; ++r) {
    for (Eigen::Index i = 0; i < g; ++i) {
      if (!(scale(i) > 0.0) || !std::isfinite(scale(i))) continue;
      const auto c = static_cast<Eigen::Index>(r);
      const double dev = std::max({lo(i, c) - curve.median(i), curve.median(i) - hi(i, c), 0.0}) / scale(i);
      sup[r] = std::max(sup[r], dev);
    }
  }
  const double crit = quantile(sup, config.level);
  curve.simultaneous_lo.resize(g);
  curve.simultaneous_hi.resize(g);
  for (Eigen::Index i = 0; i < g; ++i) {
    const double half = std::isfinite(scale(i)) ? crit * scale(i) : kInf;
    curve.simultaneous_lo(i) = std::min(curve.median(i) - half, curve.pointwise_lo(i));
    curve.simultaneous_hi(i) = std::max(curve.median(i) + half, curve.pointwise_hi(i));
  }
  return curve;
}

double ece_value(std::span<const double> hp, std::span<const double> hd, double prior_log10_odds) {
  if (hp.empty() || hd.empty()) throw Error(ErrorCode::EmptyClass, "ECE needs both classes");
  const double prob = 1.0 / (1.0 + std::pow(10.0, -prior_log10_odds));
  double sp = 0.0, sd = 0.0;
  for (double s : hp) sp += log2_softplus(-(s + prior_log10_odds) * kLn10);
  for (double s : hd) sd += log2_softplus((s + prior_log10_odds) * kLn10);
  return prob * sp / static_cast<double>(hp.size()) + (1.0 - prob) * sd / static_cast<double>(hd.size());
}

void pav_calibrated_scores(const ScoreBatch& batch, std::vector<double>& hp_out, std::vector<double>& hd_out) {
  batch.validate();
  std::vector<double> scores(batch.hp);
  scores.insert(scores.end(), batch.hd.begin(), batch.hd.end());
  std::vector<int> labels(batch.hp.size(), 1);
  labels.resize(scores.size(), 0);
  const std::vector<double> post = pav_fit(scores, labels);
  const double log10_prior = std::log10(static_cast<double>(batch.hd.size()) / static_cast<double>(batch.hp.size()));
  const auto to_log10_lr = [&](double q) {
    if (q <= 0.0) return -kInf;
    if (q >= 1.0) return kInf;
    return std::log10(q / (1.0 - q)) + log10_prior;
  };
  hp_out.clear();
  hd_out.clear();
  for (std::size_t i = 0; i < scores.size(); ++i)
    (labels[i] ? hp_out : hd_out).push_back(to_log10_lr(post[i]));
}

EceCurves ece_curve(const ScoreBatch& batch, const Vec& prior_log10_odds_grid) {
  batch.validate();
  std::vector<double> cal_p, cal_d;
  pav_calibrated_scores(batch, cal_p, cal_d);
  const std::vector<double> zero_p(batch.hp.size(), 0.0), zero_d(batch.hd.size(), 0.0);
  const Eigen::Index g = prior_log10_odds_grid.size();
  EceCurves out;
  out.prior_log10_odds = prior_log10_odds_grid;
  out.prior_prob.resize(g);
  out.observed.resize(g);
  out.calibrated.resize(g);
  out.null_curve.resize(g);
  for (Eigen::Index i = 0; i < g; ++i) {
    const double lo = prior_log10_odds_grid(i);
    out.prior_prob(i) = 1.0 / (1.0 + std::pow(10.0, -lo));
    out.observed(i) = ece_value(batch.hp, batch.hd, lo);
    out.calibrated(i) = ece_value(cal_p, cal_d, lo);
    out.null_curve(i) = ece_value(zero_p, zero_d, lo);
  }
  return out;
}

Vec default_prior_grid() { return Vec::LinSpaced(101, -2.5, 2.5); }

}  // namespace fidfac
