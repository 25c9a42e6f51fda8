#include "fidfac/bf_engine.hpp"

#include <nlohmann/json.hpp>

namespace fidfac {

namespace {

Mat spd_inverse(const Mat& m, const char* what) {
  Eigen::LLT<Mat> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, what);
  return llt.solve(Mat::Identity(m.rows(), m.cols()));
}

NormalParams normal_from_precision(const Mat& precision, const Vec& shift, const char* what) {
  NormalParams out;
  out.cov = symmetrize(spd_inverse(precision, what));
  out.mean = out.cov * shift;
  return out;
}

Vec draw_normal(const NormalParams& np, SplitMix64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const LowerTriFactor l = chol_with_jitter(np.cov);
  Vec z(np.mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(gen);
  return np.mean + l.matrix() * z;
}

void refresh_residuals(GibbsState& state, const BfData& data) {
  state.cv.resize(data.augmented.n());
  for (std::size_t i = 0; i < data.augmented.n(); ++i) {
    const Vec center = state.mu_a + state.bt[i];
    state.cv[i] = data.augmented.sources[i].rows.rowwise() - center.transpose();
  }
}

}  // namespace

void PriorSpec::validate() const {
  const Eigen::Index p = mu_pi.size();
  if (p < 1 || sigma_b.rows() != p || sigma_b.cols() != p || sigma_e.rows() != p || sigma_e.cols() != p)
    throw Error(ErrorCode::LengthMismatch, "prior dimensions disagree");
  chol_factor(symmetrize(sigma_b));
  chol_factor(symmetrize(sigma_e));
  const double pd = static_cast<double>(p);
  if (!(nu_b > pd - 1.0) || !(nu_e > pd - 1.0))
    throw Error(ErrorCode::InvalidDegreesOfFreedom, "prior degrees of freedom must exceed p - 1");
  if (!(k > 0.0)) throw Error(ErrorCode::InvalidArgument, "prior scale k must be positive");
}

PriorFlavor parse_prior_flavor(const std::string& name) {
  if (name == "prosecution") return PriorFlavor::Prosecution;
  if (name == "defense") return PriorFlavor::Defense;
  throw Error(ErrorCode::ConfigError, "unknown prior flavor '" + name + "' (expected prosecution or defense)");
}

const char* to_string(PriorFlavor flavor) { return flavor == PriorFlavor::Prosecution ? "prosecution" : "defense"; }

PriorKnobs PriorKnobs::preset(PriorFlavor flavor) {
  PriorKnobs k;
  if (flavor == PriorFlavor::Prosecution) {
    k.sigma_b_scale = 100.0;
  } else {
    k.sigma_b_scale = 0.01;
    k.nu_e = 200.0;
  }
  return k;
}

PriorSpec prior_from_knobs(const PriorKnobs& knobs, const AltEstimates& summaries, std::string label) {
  const double p = static_cast<double>(summaries.mu.size());
  PriorSpec prior;
  prior.mu_pi = summaries.mu;
  prior.nu_b = knobs.nu_b > 0.0 ? knobs.nu_b : p + 2.0;
  prior.nu_e = knobs.nu_e > 0.0 ? knobs.nu_e : p + 2.0;
  prior.k = knobs.k;
  prior.sigma_b = knobs.sigma_b_scale * summaries.bbt;
  prior.sigma_e = summaries.cct * (prior.nu_e - p - 1.0);
  prior.label = std::move(label);
  return prior;
}

PriorSpec prior_preset(PriorFlavor flavor, const AltEstimates& summaries) {
  return prior_from_knobs(PriorKnobs::preset(flavor), summaries, to_string(flavor));
}

GibbsScheme parse_gibbs_scheme(const std::string& name) {
  if (name == "exact") return GibbsScheme::Exact;
  if (name == "as_displayed") return GibbsScheme::AsDisplayed;
  throw Error(ErrorCode::ConfigError, "unknown Gibbs scheme '" + name + "' (expected exact or as_displayed)");
}

const char* to_string(GibbsScheme scheme) { return scheme == GibbsScheme::Exact ? "exact" : "as_displayed"; }

BfData BfData::from_case(const CaseBundle& bundle) {
  if (bundle.unknown.count() < 1) throw Error(ErrorCode::EmptyInput, "the BF needs at least one unknown row");
  bundle.validate();
  BfData data;
  data.specific = bundle.specific;
  data.unknown = bundle.unknown;
  data.augmented = bundle.alternative;
  data.augmented.sources.push_back(bundle.unknown);
  return data;
}

GibbsState GibbsState::initial(const BfData& data) {
  GibbsState s;
  try {
    const AltEstimates est = estimate_alt_params(data.augmented);
    s.mu_s = data.specific.mean();
    s.aat = est.cct;
    s.mu_a = est.mu;
    s.bbt = chol_with_jitter(est.bbt).gram();
    s.cct = chol_with_jitter(est.cct).gram();
  } catch (const Error& e) {
    throw Error(ErrorCode::ChainInitializationFailed, std::string("Gibbs start: ") + e.what());
  }
  s.bt.assign(data.augmented.n(), Vec::Zero(s.mu_a.size()));
  refresh_residuals(s, data);
  return s;
}

NormalParams mu_s_conditional(const BfData& data, const GibbsState& state, const PriorSpec& prior) {
  const double m = static_cast<double>(data.specific.count());
  const Mat a_inv = spd_inverse(state.aat, "AA'");
  const Mat b_inv = spd_inverse(prior.sigma_b, "Sigma_b");
  const Mat precision = m * a_inv + b_inv;                                      // M
  const Vec shift = m * a_inv * data.specific.mean() + b_inv * prior.mu_pi;   // L
  return normal_from_precision(precision, shift, "mu_s precision");
}

InvWishartParams aat_conditional(const BfData& data, const GibbsState& state, const PriorSpec& prior) {
  const Mat u = data.specific.rows.rowwise() - state.mu_s.transpose();
  return {symmetrize(u.transpose() * u + prior.sigma_e), prior.nu_e + static_cast<double>(data.specific.count())};
}

NormalParams mu_a_conditional(const BfData& data, const GibbsState& state, const PriorSpec& prior, GibbsScheme scheme) {
  const Eigen::Index p = state.mu_a.size();
  const Mat prior_prec = spd_inverse(prior.k * prior.sigma_b, "k Sigma_b");
  Mat precision = prior_prec;
  Vec shift = prior_prec * prior.mu_pi;
  if (scheme == GibbsScheme::AsDisplayed) {
    const double total = static_cast<double>(data.augmented.total());
    const Mat w = spd_inverse(state.bbt + state.cct, "BB' + CC'");
    Vec grand = Vec::Zero(p);
    for (const auto& s : data.augmented.sources) grand += s.rows.colwise().sum().transpose();
    grand /= total;
    precision += total * w;
    shift += total * w * grand;
  } else {
    for (const auto& s : data.augmented.sources) {
      const double mi = static_cast<double>(s.count());
      const Mat w = spd_inverse(state.bbt + state.cct / mi, "BB' + CC'/m_i");
      precision += w;
      shift += w * s.mean();
    }
  }
  return normal_from_precision(precision, shift, "mu_a precision");
}

NormalParams latent_conditional(const BfData& data, const GibbsState& state, std::size_t source) {
  const MeasurementPanel& panel = data.augmented.sources.at(source);
  const double mi = static_cast<double>(panel.count());
  const Mat c_inv = spd_inverse(state.cct, "CC'");
  const Mat precision = spd_inverse(state.bbt, "BB'") + mi * c_inv;
  return normal_from_precision(precision, mi * c_inv * (panel.mean() - state.mu_a), "source-effect precision");
}

InvWishartParams bbt_conditional(const BfData& data, const GibbsState& state, const PriorSpec& prior,
                                 GibbsScheme scheme) {
  const Eigen::Index p = state.mu_a.size();
  Mat scatter = Mat::Zero(p, p);
  double count = 0.0;
  for (std::size_t i = 0; i < data.augmented.n(); ++i) {
    const Vec& b = state.bt[i];
    if (scheme == GibbsScheme::AsDisplayed) {
      // S_v: rows y - mu_a - CV equal bt_i, repeated m_i times
      const double mi = static_cast<double>(data.augmented.sources[i].count());
      scatter += mi * b * b.transpose();
      count += mi;
    } else {
      scatter += b * b.transpose();
      count += 1.0;
    }
  }
  return {symmetrize(scatter + prior.sigma_b), count + prior.nu_b};
}

InvWishartParams cct_conditional(const BfData& data, const GibbsState& state, const PriorSpec& prior) {
  const Eigen::Index p = state.mu_a.size();
  Mat scatter = Mat::Zero(p, p);
  for (std::size_t i = 0; i < data.augmented.n(); ++i) {
    const Vec center = state.mu_a + state.bt[i];
    const Mat r = data.augmented.sources[i].rows.rowwise() - center.transpose();
    scatter += r.transpose() * r;
  }
  return {symmetrize(scatter + prior.sigma_e), static_cast<double>(data.augmented.total()) + prior.nu_e};
}

void latent_conditionals(GibbsState& state, const BfData& data, Rng& rng) {
  const std::uint64_t base = rng();
  const Mat c_inv = spd_inverse(state.cct, "CC'");
  const Mat b_inv = spd_inverse(state.bbt, "BB'");
  state.bt.resize(data.augmented.n());
  for (std::size_t i = 0; i < data.augmented.n(); ++i) {
    const MeasurementPanel& panel = data.augmented.sources[i];
    const double mi = static_cast<double>(panel.count());
    const NormalParams np =
        normal_from_precision(b_inv + mi * c_inv, mi * c_inv * (panel.mean() - state.mu_a), "source-effect precision");
    SplitMix64 gen(splitmix64(base ^ fnv1a64(panel.source_id)));
    state.bt[i] = draw_normal(np, gen);
  }
  refresh_residuals(state, data);
}

void gibbs_step(GibbsState& state, const BfData& data, const PriorSpec& prior, GibbsScheme scheme, Rng& rng) {
  const NormalParams ms = mu_s_conditional(data, state, prior);
  state.mu_s = sample_mvn(ms.mean, ms.cov, rng);
  const InvWishartParams a = aat_conditional(data, state, prior);
  state.aat = sample_inv_wishart(a.scale, a.df, rng);
  const NormalParams ma = mu_a_conditional(data, state, prior, scheme);
  state.mu_a = sample_mvn(ma.mean, ma.cov, rng);
  latent_conditionals(state, data, rng);
  const InvWishartParams b = bbt_conditional(data, state, prior, scheme);
  state.bbt = sample_inv_wishart(b.scale, b.df, rng);
  latent_conditionals(state, data, rng);
  const InvWishartParams c = cct_conditional(data, state, prior);
  state.cct = sample_inv_wishart(c.scale, c.df, rng);
}

double bf_log_ratio(const MeasurementPanel& unknown, const GibbsState& state) {
  const LowerTriFactor la = chol_factor(symmetrize(state.aat));
  double log_fs = 0.0;
  for (Eigen::Index j = 0; j < unknown.count(); ++j)
    log_fs += mvn_logpdf_chol(unknown.rows.row(j).transpose(), state.mu_s, la.matrix());
  return log_fs - re_source_loglik(unknown, state.mu_a, state.bbt, state.cct);
}

BfResult compute_bf(const CaseBundle& bundle, const PriorSpec& prior, const BfConfig& config) {
  if (config.sweeps <= config.burn_in || config.burn_in < 0)
    throw Error(ErrorCode::InvalidArgument, "Gibbs needs sweeps > burn_in >= 0");
  prior.validate();
  const BfData data = BfData::from_case(bundle);
  GibbsState state = GibbsState::initial(data);
  Rng rng(config.seed);
  std::vector<double> ratios;
  ratios.reserve(static_cast<std::size_t>(config.sweeps - config.burn_in));
  for (long it = 0; it < config.sweeps; ++it) {
    gibbs_step(state, data, prior, config.scheme, rng);
    if (it >= config.burn_in) ratios.push_back(bf_log_ratio(data.unknown, state));
  }
  const LogMeanEstimate est = log_mean_exp_batched(ratios, config.batches);
  BfResult res;
  res.log10_bf = est.log_mean / kLn10;
  res.mc_se = est.mc_se;
  res.n_sweeps = static_cast<long>(ratios.size());
  res.prior_label = prior.label;
  return res;
}

std::string to_json(const BfResult& r, const PriorSpec& prior, const BfConfig& c) {
  const auto mat = [](const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  nlohmann::ordered_json j;
  j["log10_bf"] = r.log10_bf;
  j["mc_se"] = r.mc_se;
  j["n_sweeps"] = r.n_sweeps;
  j["prior"] = {{"label", prior.label},
                {"mu_pi", std::vector<double>(prior.mu_pi.data(), prior.mu_pi.data() + prior.mu_pi.size())},
                {"sigma_b", mat(prior.sigma_b)},
                {"sigma_e", mat(prior.sigma_e)},
                {"nu_b", prior.nu_b},
                {"nu_e", prior.nu_e},
                {"k", prior.k}};
  j["config"] = {{"sweeps", c.sweeps}, {"burn_in", c.burn_in}, {"scheme", to_string(c.scheme)}, {"batches", c.batches}};
  return j.dump(2);
}

}  // namespace fidfac
