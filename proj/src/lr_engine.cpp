#include "fidfac/lr_engine.hpp"

#include <nlohmann/json.hpp>

namespace fidfac {

namespace {

LowerTriFactor degenerate_guard(const Mat& s, const char* what) {
  try {
    return chol_with_jitter(symmetrize(s));
  } catch (const Error&) {
    throw Error(ErrorCode::DegenerateSample, std::string(what) + " is singular even after jitter");
  }
}

MeasurementPanel pooled_panel(const MeasurementPanel& a, const MeasurementPanel& b) {
  MeasurementPanel out;
  out.source_id = a.source_id;
  out.rows.resize(a.count() + b.count(), a.dim());
  out.rows.topRows(a.count()) = a.rows;
  if (b.count() > 0) out.rows.bottomRows(b.count()) = b.rows;
  return out;
}

}  // namespace

double specific_loglik(const MeasurementPanel& panel, const Vec& mu, const Mat& aat) {
  const LowerTriFactor l = chol_factor(symmetrize(aat));
  double total = 0.0;
  for (Eigen::Index k = 0; k < panel.count(); ++k) total += mvn_logpdf_chol(panel.rows.row(k).transpose(), mu, l.matrix());
  return total;
}

SpecificMle mle_specific(const MeasurementPanel& panel) {
  panel.validate();
  const Eigen::Index m = panel.count();
  if (m < 2) throw Error(ErrorCode::DegenerateSample, "specific MLE needs m >= 2");
  SpecificMle fit;
  fit.mu = panel.mean();
  const Mat u = panel.rows.rowwise() - fit.mu.transpose();
  const Mat scatter = u.transpose() * u / static_cast<double>(m);
  fit.aat = degenerate_guard(scatter, "specific-source scatter").gram();
  fit.log_lik = specific_loglik(panel, fit.mu, fit.aat);
  if (!std::isfinite(fit.log_lik)) throw Error(ErrorCode::DegenerateSample, "specific log-likelihood is not finite");
  return fit;
}

double alt_marginal_loglik(const AlternativeDataset& data, const Vec& mu, const Mat& bbt, const Mat& cct) {
  double total = 0.0;
  for (const auto& s : data.sources) total += re_source_loglik(s, mu, bbt, cct);
  return total;
}

double alt_marginal_loglik(const AlternativeDataset& data, const GaussianAltParams& params) {
  return alt_marginal_loglik(data, params.mu, params.bbt, params.cct);
}

Mat project_psd(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrize(s));
  if ((eig.eigenvalues().array() >= 0.0).all()) return symmetrize(s);
  const Vec clipped = eig.eigenvalues().cwiseMax(0.0);
  return symmetrize(eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose());
}

AlternativeMle mle_alternative(const AlternativeDataset& data, const EmConfig& config) {
  data.validate();
  const Eigen::Index p = data.dim();
  const double total = static_cast<double>(data.total());
  const double n = static_cast<double>(data.n());

  GaussianAltParams th;
  {
    const AltEstimates est = estimate_alt_params(data);
    th.mu = est.mu;
    th.bbt = project_psd(est.bbt);
    th.cct = degenerate_guard(est.cct, "within-source scatter").gram();
  }

  AlternativeMle fit;
  double ll = alt_marginal_loglik(data, th);
  std::vector<Vec> means;
  for (const auto& s : data.sources) means.push_back(s.mean());

  for (int it = 0; it < config.max_iter; ++it) {
    std::vector<Vec> bhat(data.n());
    Mat v_sum = Mat::Zero(p, p), v_weighted = Mat::Zero(p, p), b_outer = Mat::Zero(p, p);
    for (std::size_t i = 0; i < data.n(); ++i) {
      const double mi = static_cast<double>(data.sources[i].count());
      Eigen::LLT<Mat> llt(symmetrize(th.bbt + th.cct / mi));
      if (llt.info() != Eigen::Success) throw Error(ErrorCode::DegenerateSample, "EM: BB' + CC'/m_i is singular");
      const Mat gain = llt.solve(th.bbt).transpose();  // B (B + C/m)^{-1}
      bhat[i] = gain * (means[i] - th.mu);
      const Mat v = symmetrize(th.bbt - gain * th.bbt);
      v_sum += v;
      v_weighted += mi * v;
      b_outer += bhat[i] * bhat[i].transpose();
    }
    Vec mu = Vec::Zero(p);
    for (std::size_t i = 0; i < data.n(); ++i)
      mu += static_cast<double>(data.sources[i].count()) * (means[i] - bhat[i]);
    mu /= total;
    Mat resid = Mat::Zero(p, p);
    for (std::size_t i = 0; i < data.n(); ++i) {
      const Vec center = mu + bhat[i];
      const Mat r = data.sources[i].rows.rowwise() - center.transpose();
      resid += r.transpose() * r;
    }
    GaussianAltParams next;
    next.mu = mu;
    next.bbt = project_psd((b_outer + v_sum) / n);
    next.cct = symmetrize((resid + v_weighted) / total);
    degenerate_guard(next.cct, "EM within-source covariance");

    const double next_ll = alt_marginal_loglik(data, next);
    if (!std::isfinite(next_ll)) throw Error(ErrorCode::DegenerateSample, "EM log-likelihood is not finite");
    th = std::move(next);
    fit.history.push_back(next_ll);
    fit.iterations = it + 1;
    const double gain = next_ll - ll;
    ll = next_ll;
    if (gain < config.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.params = std::move(th);
  fit.log_lik = ll;
  return fit;
}

LrResult compute_lr(const CaseBundle& bundle, const EmConfig& config) {
  LrResult res;
  try {
    const SpecificMle sep = mle_specific(bundle.specific);
    const SpecificMle pooled = mle_specific(pooled_panel(bundle.specific, bundle.unknown));
    const AlternativeMle alt = mle_alternative(bundle.alternative, config);
    AlternativeDataset augmented = bundle.alternative;
    if (bundle.unknown.count() > 0) augmented.sources.push_back(bundle.unknown);
    const AlternativeMle alt_star =
        bundle.unknown.count() > 0 ? mle_alternative(augmented, config) : alt;
    res.log_num_specific = pooled.log_lik;
    res.log_den_specific = sep.log_lik;
    res.log_num_alt = alt.log_lik;
    res.log_den_alt = alt_star.log_lik;
    res.em_converged = alt.converged && alt_star.converged;
    const double log_lr = res.log_num_specific + res.log_num_alt - res.log_den_specific - res.log_den_alt;
    if (!std::isfinite(log_lr)) throw Error(ErrorCode::DegenerateSample, "LR is not finite");
    res.log10_lr = log_lr / kLn10;
    res.ok = true;
  } catch (const Error& e) {
    res.ok = false;
    res.failure = to_string(e.code());
  }
  return res;
}

std::string to_json(const LrResult& r) {
  nlohmann::ordered_json j;
  j["ok"] = r.ok;
  if (r.ok)
    j["log10_lr"] = r.log10_lr;
  else
    j["log10_lr"] = nullptr;
  j["failure"] = r.failure;
  j["log_num_specific"] = r.log_num_specific;
  j["log_den_specific"] = r.log_den_specific;
  j["log_num_alt"] = r.log_num_alt;
  j["log_den_alt"] = r.log_den_alt;
  j["em_converged"] = r.em_converged;
  return j.dump(2);
}

}  // namespace fidfac
