#include <gtest/gtest.h>

#include "fidfac/bf_engine.hpp"
#include "oracles.hpp"

using namespace fidfac;

namespace {

CaseBundle scalar_case(Rng& rng, std::size_t n = 8, Eigen::Index m = 3) {
  Mat b(1, 1), c(1, 1);
  b << 1.0;
  c << 0.3;
  const AlternativeParams params{Vec::Zero(1), LowerTriFactor(b), LowerTriFactor(c), 5.0};
  CaseBundle bundle;
  bundle.alternative = generate_alternative(params, n, m, rng);
  bundle.specific = MeasurementPanel{"K", Mat(m, 1)};
  bundle.unknown = MeasurementPanel{"U", Mat(m, 1)};
  for (Eigen::Index k = 0; k < m; ++k) {
    bundle.specific.rows(k, 0) = 0.4 + 0.3 * sample_std_normal(1, rng)(0);
    bundle.unknown.rows(k, 0) = 0.4 + 0.3 * sample_std_normal(1, rng)(0);
  }
  return bundle;
}

CaseBundle bivariate_case(Rng& rng) {
  Mat b(2, 2), c(2, 2);
  b << 1.0, 0.0, 0.3, 0.8;
  c << 0.2, 0.0, 0.05, 0.15;
  const AlternativeParams params{Vec::Constant(2, 1.0), LowerTriFactor(b), LowerTriFactor(c), 5.0};
  CaseBundle bundle;
  bundle.alternative = generate_alternative(params, 15, 3, rng);
  bundle.specific = generate_alternative_source(params, 3, rng, "K");
  bundle.unknown = bundle.specific;
  bundle.unknown.source_id = "U";
  bundle.unknown.rows.array() += 0.01;
  return bundle;
}

PriorSpec scalar_prior() {
  PriorSpec prior;
  prior.mu_pi = Vec::Constant(1, 0.2);
  prior.sigma_b = Mat::Constant(1, 1, 0.5);
  prior.sigma_e = Mat::Constant(1, 1, 0.09);
  prior.nu_b = 3.0;
  prior.nu_e = 4.0;
  prior.k = 2.0;
  prior.label = "test";
  return prior;
}

GibbsState scalar_state(const BfData& data) {
  GibbsState s = GibbsState::initial(data);
  s.mu_s = Vec::Constant(1, 0.35);
  s.aat = Mat::Constant(1, 1, 0.2);
  s.mu_a = Vec::Constant(1, -0.1);
  s.bbt = Mat::Constant(1, 1, 0.7);
  s.cct = Mat::Constant(1, 1, 0.08);
  for (std::size_t i = 0; i < s.bt.size(); ++i) s.bt[i] = Vec::Constant(1, 0.05 * static_cast<double>(i) - 0.2);
  return s;
}

}  // namespace

TEST(Priors, PresetsFollowSummaries) {
  AltEstimates est;
  est.mu = Vec::LinSpaced(2, 1.0, 2.0);
  est.bbt = Mat::Identity(2, 2) * 4.0;
  est.bbt(0, 1) = est.bbt(1, 0) = 1.0;
  est.cct = Mat::Identity(2, 2) * 0.1;
  const PriorSpec pro = prior_preset(PriorFlavor::Prosecution, est);
  const PriorSpec def = prior_preset(PriorFlavor::Defense, est);
  EXPECT_NO_THROW(pro.validate());
  EXPECT_NO_THROW(def.validate());
  EXPECT_NEAR(pro.sigma_b.trace() / def.sigma_b.trace(), 1e4, 1e-8);
  EXPECT_EQ(pro.mu_pi, est.mu);
  EXPECT_EQ(def.nu_e, 200.0);
  EXPECT_TRUE(def.sigma_e.isApprox(est.cct * 197.0, 1e-14));
  EXPECT_EQ(pro.nu_b, 4.0);
  EXPECT_EQ(pro.label, "prosecution");
  EXPECT_EQ(def.label, "defense");
}

TEST(Priors, BadInputsRejected) {
  try {
    parse_prior_flavor("neutral");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
  PriorSpec prior = scalar_prior();
  prior.nu_e = -1.0;
  try {
    prior.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidDegreesOfFreedom);
  }
  prior = scalar_prior();
  prior.sigma_b(0, 0) = -1.0;
  try {
    prior.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
  EXPECT_EQ(parse_gibbs_scheme("as_displayed"), GibbsScheme::AsDisplayed);
  EXPECT_THROW(parse_gibbs_scheme("approx"), Error);
}

TEST(Conditionals, ScalarConjugacy) {
  Rng rng(1);
  const CaseBundle bundle = scalar_case(rng);
  const BfData data = BfData::from_case(bundle);
  ASSERT_EQ(data.augmented.n(), bundle.alternative.n() + 1);
  const PriorSpec prior = scalar_prior();
  const GibbsState s = scalar_state(data);
  const double m = 3.0;

  const double ybar = bundle.specific.mean()(0);
  const double prec_s = m / 0.2 + 1.0 / 0.5;
  const auto ms = mu_s_conditional(data, s, prior);
  EXPECT_NEAR(ms.cov(0, 0), 1.0 / prec_s, 1e-12);
  EXPECT_NEAR(ms.mean(0), (m * ybar / 0.2 + 0.2 / 0.5) / prec_s, 1e-12);

  double ss = 0.0;
  for (Eigen::Index k = 0; k < 3; ++k) ss += std::pow(bundle.specific.rows(k, 0) - 0.35, 2);
  const auto aa = aat_conditional(data, s, prior);
  EXPECT_NEAR(aa.scale(0, 0), ss + 0.09, 1e-12);
  EXPECT_EQ(aa.df, 4.0 + m);

  double prec_a = 1.0 / (2.0 * 0.5), shift_a = 0.2 / (2.0 * 0.5);
  for (const auto& src : data.augmented.sources) {
    const double w = 1.0 / (0.7 + 0.08 / static_cast<double>(src.count()));
    prec_a += w;
    shift_a += w * src.mean()(0);
  }
  const auto ma = mu_a_conditional(data, s, prior, GibbsScheme::Exact);
  EXPECT_NEAR(ma.cov(0, 0), 1.0 / prec_a, 1e-12);
  EXPECT_NEAR(ma.mean(0), shift_a / prec_a, 1e-12);

  const double total = static_cast<double>(data.augmented.total());
  double grand = 0.0;
  for (const auto& src : data.augmented.sources) grand += src.rows.sum();
  grand /= total;
  const double prec_d = 1.0 / (2.0 * 0.5) + total / (0.7 + 0.08);
  const auto md = mu_a_conditional(data, s, prior, GibbsScheme::AsDisplayed);
  EXPECT_NEAR(md.cov(0, 0), 1.0 / prec_d, 1e-12);
  EXPECT_NEAR(md.mean(0), (0.2 / (2.0 * 0.5) + total * grand / 0.78) / prec_d, 1e-12);

  for (std::size_t i : {std::size_t{0}, data.augmented.n() - 1}) {
    const auto& src = data.augmented.sources[i];
    const double mi = static_cast<double>(src.count());
    const double prec_t = 1.0 / 0.7 + mi / 0.08;
    const auto lt = latent_conditional(data, s, i);
    EXPECT_NEAR(lt.cov(0, 0), 1.0 / prec_t, 1e-12);
    EXPECT_NEAR(lt.mean(0), mi / 0.08 * (src.mean()(0) + 0.1) / prec_t, 1e-12);
  }

  double sb = 0.0, sb_rows = 0.0, sc = 0.0;
  for (std::size_t i = 0; i < data.augmented.n(); ++i) {
    const auto& src = data.augmented.sources[i];
    sb += s.bt[i](0) * s.bt[i](0);
    sb_rows += static_cast<double>(src.count()) * s.bt[i](0) * s.bt[i](0);
    for (Eigen::Index k = 0; k < src.count(); ++k) sc += std::pow(src.rows(k, 0) + 0.1 - s.bt[i](0), 2);
  }
  const auto be = bbt_conditional(data, s, prior, GibbsScheme::Exact);
  EXPECT_NEAR(be.scale(0, 0), sb + 0.5, 1e-12);
  EXPECT_EQ(be.df, static_cast<double>(data.augmented.n()) + 3.0);
  const auto bd = bbt_conditional(data, s, prior, GibbsScheme::AsDisplayed);
  EXPECT_NEAR(bd.scale(0, 0), sb_rows + 0.5, 1e-12);
  EXPECT_EQ(bd.df, total + 3.0);
  const auto cc = cct_conditional(data, s, prior);
  EXPECT_NEAR(cc.scale(0, 0), sc + 0.09, 1e-12);
  EXPECT_EQ(cc.df, total + 4.0);
}

TEST(BfLogRatio, MatchesDenseOracle) {
  Rng rng(2);
  const CaseBundle bundle = bivariate_case(rng);
  const BfData data = BfData::from_case(bundle);
  GibbsState s = GibbsState::initial(data);
  s.mu_s = Vec::Constant(2, 1.1);
  s.aat = Mat::Identity(2, 2) * 0.05;
  s.aat(0, 1) = s.aat(1, 0) = 0.01;
  const Eigen::Index mu = bundle.unknown.count();
  double log_fs = 0.0;
  Vec y(2 * mu), center(2 * mu);
  Mat cov = Mat::Zero(2 * mu, 2 * mu);
  for (Eigen::Index j = 0; j < mu; ++j) {
    log_fs += oracle::dense_mvn_logpdf(bundle.unknown.rows.row(j).transpose(), s.mu_s, s.aat);
    y.segment(2 * j, 2) = bundle.unknown.rows.row(j).transpose();
    center.segment(2 * j, 2) = s.mu_a;
    for (Eigen::Index k = 0; k < mu; ++k) cov.block(2 * j, 2 * k, 2, 2) = s.bbt + (j == k ? s.cct : Mat::Zero(2, 2));
  }
  const double expect = log_fs - oracle::dense_mvn_logpdf(y, center, cov);
  EXPECT_NEAR(bf_log_ratio(bundle.unknown, s), expect, 1e-9);
}

TEST(BfLogRatio, IdenticalModelsGiveZero) {
  Rng rng(3);
  const CaseBundle bundle = bivariate_case(rng);
  GibbsState s = GibbsState::initial(BfData::from_case(bundle));
  s.mu_s = s.mu_a;
  s.aat = s.cct;
  s.bbt = Mat::Identity(2, 2) * 1e-14;
  EXPECT_NEAR(bf_log_ratio(bundle.unknown, s), 0.0, 1e-8);
}

TEST(ComputeBf, ReproducibleAndBookkept) {
  Rng rng(4);
  const CaseBundle bundle = bivariate_case(rng);
  const PriorSpec prior = prior_preset(PriorFlavor::Prosecution, estimate_alt_params(bundle.alternative));
  BfConfig cfg{600, 100, GibbsScheme::Exact, 10, 99};
  const auto a = compute_bf(bundle, prior, cfg);
  const auto b = compute_bf(bundle, prior, cfg);
  EXPECT_EQ(a.log10_bf, b.log10_bf);
  EXPECT_EQ(a.n_sweeps, 500);
  EXPECT_EQ(a.prior_label, "prosecution");
  EXPECT_TRUE(std::isfinite(a.log10_bf));
  // the unknown panel is a near copy of the specific panel
  EXPECT_GT(a.log10_bf, 0.0);
  cfg.seed = 100;
  EXPECT_NE(compute_bf(bundle, prior, cfg).log10_bf, a.log10_bf);

  const std::string json = to_json(a, prior, cfg);
  for (const char* key : {"log10_bf", "mc_se", "sigma_b", "nu_e", "scheme"}) EXPECT_NE(json.find(key), std::string::npos);
}

TEST(ComputeBf, SweepSettingsValidated) {
  Rng rng(5);
  const CaseBundle bundle = scalar_case(rng);
  BfConfig cfg{100, 100, GibbsScheme::Exact, 10, 1};
  try {
    compute_bf(bundle, scalar_prior(), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Gibbs, ScalarSweepStaysFiniteAndPositive) {
  Rng rng(6);
  const CaseBundle bundle = scalar_case(rng, 20, 4);
  const BfData data = BfData::from_case(bundle);
  GibbsState s = GibbsState::initial(data);
  const PriorSpec prior = scalar_prior();
  Rng chain(7);
  double mean_mu_s = 0.0;
  for (int it = 0; it < 2000; ++it) {
    gibbs_step(s, data, prior, GibbsScheme::Exact, chain);
    ASSERT_GT(s.aat(0, 0), 0.0);
    ASSERT_GT(s.bbt(0, 0), 0.0);
    ASSERT_GT(s.cct(0, 0), 0.0);
    mean_mu_s += s.mu_s(0) / 2000.0;
    ASSERT_EQ(s.cv.size(), data.augmented.n());
  }
  EXPECT_NEAR(mean_mu_s, bundle.specific.mean()(0), 0.3);
}
