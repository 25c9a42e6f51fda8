#include <gtest/gtest.h>

#include "fidfac/core_stats.hpp"
#include "oracles.hpp"

using namespace fidfac;

namespace {

Mat random_spd(Eigen::Index p, Rng& rng) {
  const Mat x = Mat::NullaryExpr(p, p + 3, [&] { return std::normal_distribution<double>()(rng); });
  return x * x.transpose() / static_cast<double>(p + 3) + 0.1 * Mat::Identity(p, p);
}

}  // namespace

TEST(CholFactor, IdentityAndDiagonal) {
  EXPECT_TRUE(chol_factor(Mat::Identity(2, 2)).matrix().isApprox(Mat::Identity(2, 2)));
  Mat d = Mat::Zero(2, 2);
  d.diagonal() << 4.0, 9.0;
  Mat expect = Mat::Zero(2, 2);
  expect.diagonal() << 2.0, 3.0;
  EXPECT_TRUE(chol_factor(d).matrix().isApprox(expect, 1e-15));
}

TEST(CholFactor, ReconstructsRandomMatrices) {
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const Mat s = random_spd(1 + rep % 5, rng);
    const Mat l = chol_factor(s).matrix();
    EXPECT_LT((l * l.transpose() - s).cwiseAbs().maxCoeff(), 1e-10 * s.cwiseAbs().maxCoeff());
    EXPECT_EQ(l.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(CholFactor, RejectsIndefinite) {
  Mat s(2, 2);
  s << 1.0, 2.0, 2.0, 1.0;
  try {
    chol_factor(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
}

TEST(CholFactor, JitterRescuesRankDeficientScatter) {
  Mat s(2, 2);
  s << 1.0, 1.0, 1.0, 1.0;
  const Mat l = chol_with_jitter(s).matrix();
  EXPECT_GT(l(1, 1), 0.0);
  EXPECT_NEAR((l * l.transpose() - s).cwiseAbs().maxCoeff(), 1e-10, 1e-11);
}

TEST(LowerTriFactor, UnconstrainedRoundTrip) {
  Mat l(3, 3);
  l << 0.5, 0, 0, -1.2, 2.0, 0, 0.3, 0.7, 1.5;
  const LowerTriFactor f(l);
  std::vector<double> coords(6);
  f.to_unconstrained(coords);
  EXPECT_NEAR(coords[0], std::log(0.5), 1e-15);
  EXPECT_TRUE(LowerTriFactor::from_unconstrained(coords, 3).matrix().isApprox(l, 1e-14));
}

TEST(MvnLogpdf, StandardValues) {
  EXPECT_NEAR(mvn_logpdf(Vec::Zero(2), Vec::Zero(2), Mat::Identity(2, 2)), -std::log(2 * std::numbers::pi), 1e-14);
  EXPECT_NEAR(mvn_logpdf(Vec::Zero(1), Vec::Zero(1), Mat::Identity(1, 1)), -0.5 * std::log(2 * std::numbers::pi),
              1e-14);
}

TEST(MvnLogpdf, MatchesDenseOracle) {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Mat cov = random_spd(3, rng);
    const Vec x = sample_std_normal(3, rng), mu = sample_std_normal(3, rng);
    EXPECT_NEAR(mvn_logpdf(x, mu, cov), oracle::dense_mvn_logpdf(x, mu, cov), 1e-10);
  }
}

TEST(MvnLogpdf, BivariateDensityIntegratesToOne) {
  Mat cov(2, 2);
  cov << 1.0, 0.4, 0.4, 0.8;
  const Vec mu = Vec::Zero(2);
  std::vector<double> x, w;
  oracle::simpson_grid(-9.0, 9.0, 600, x, w);
  double total = 0.0;
  Vec pt(2);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) {
      pt << x[i], x[j];
      total += w[i] * w[j] * std::exp(mvn_logpdf(pt, mu, cov));
    }
  EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST(MvnLogpdf, AffineMapShiftsByLogDet) {
  Rng rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const Mat cov = random_spd(3, rng);
    const Mat m = random_spd(3, rng) + Mat::NullaryExpr(3, 3, [&] { return 0.3 * sample_std_normal(1, rng)(0); });
    const Vec b = sample_std_normal(3, rng), x = sample_std_normal(3, rng), mu = sample_std_normal(3, rng);
    const double base = mvn_logpdf(x, mu, cov);
    const double mapped = mvn_logpdf((m * x + b).eval(), (m * mu + b).eval(), (m * cov * m.transpose()).eval());
    EXPECT_NEAR(mapped, base - std::log(std::abs(m.determinant())), 1e-9);
    const double t_base = mvt_logpdf(x, mu, cov, 4.0);
    const double t_mapped =
        mvt_logpdf((m * x + b).eval(), (m * mu + b).eval(), (m * cov * m.transpose()).eval(), 4.0);
    EXPECT_NEAR(t_mapped, t_base - std::log(std::abs(m.determinant())), 1e-9);
  }
}

TEST(MvtLogpdf, EllipticalSymmetry) {
  Rng rng(5);
  const Mat scale = random_spd(2, rng);
  const Vec mu = sample_std_normal(2, rng), v = sample_std_normal(2, rng);
  EXPECT_NEAR(mvt_logpdf((mu + v).eval(), mu, scale, 3.0), mvt_logpdf((mu - v).eval(), mu, scale, 3.0), 1e-14);
}

TEST(MvtLogpdf, LargeDfApproachesGaussian) {
  Rng rng(9);
  const Mat scale = random_spd(2, rng);
  const Vec mu = sample_std_normal(2, rng), x = sample_std_normal(2, rng);
  EXPECT_NEAR(mvt_logpdf(x, mu, scale, 1e6), mvn_logpdf(x, mu, scale), 1e-3);
}

TEST(MvtLogpdf, ScalarMatchesOracleAndNormalizes) {
  std::vector<double> x, w, f;
  oracle::simpson_grid(-400.0, 400.0, 400000, x, w);
  for (double xi : x) {
    Vec v(1);
    v << xi;
    f.push_back(mvt_logpdf(v, Vec::Zero(1), Mat::Identity(1, 1), 5.0));
  }
  EXPECT_NEAR(std::exp(oracle::log_weighted_sum(f, w)), 1.0, 1e-5);
  Vec v(1);
  v << 1.3;
  EXPECT_NEAR(mvt_logpdf(v, Vec::Zero(1), Mat::Identity(1, 1), 5.0), oracle::t_logpdf(1.3, 5.0), 1e-13);
}

TEST(MvtLogpdf, RejectsNonPositiveDf) {
  EXPECT_THROW(mvt_logpdf(Vec::Zero(1), Vec::Zero(1), Mat::Identity(1, 1), 0.0), Error);
}

TEST(Samplers, NormalMean) {
  Rng rng(1);
  Vec mu(2);
  mu << 1.0, -2.0;
  Vec acc = Vec::Zero(2);
  const int n = 100000;
  for (int i = 0; i < n; ++i) acc += sample_mvn(mu, Mat::Identity(2, 2), rng);
  EXPECT_LT((acc / n - mu).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Samplers, StudentCovariance) {
  Rng rng(2);
  Mat scale(2, 2);
  scale << 1.0, 0.3, 0.3, 0.5;
  const int n = 100000;
  Mat acc = Mat::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const Vec x = sample_mvt(Vec::Zero(2), scale, 5.0, rng);
    acc += x * x.transpose();
  }
  const Mat expect = 5.0 / 3.0 * scale;
  EXPECT_LT(((acc / n) - expect).norm() / expect.norm(), 0.05);
}

TEST(Samplers, InverseWishartMean) {
  Rng rng(4);
  const int p = 2;
  const double df = 10.0;
  const int n = 100000;
  Mat acc = Mat::Zero(p, p);
  for (int i = 0; i < n; ++i) acc += sample_inv_wishart(Mat::Identity(p, p), df, rng);
  const Mat expect = Mat::Identity(p, p) / (df - p - 1);
  EXPECT_LT(((acc / n) - expect).norm() / expect.norm(), 0.05);
}

TEST(Samplers, InverseWishartRejectsSmallDf) {
  Rng rng(4);
  try {
    sample_inv_wishart(Mat::Identity(3, 3), 1.5, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidDegreesOfFreedom);
  }
}

TEST(Samplers, ReproducibleForFixedSeed) {
  Rng a(77), b(77);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(sample_mvt(Vec::Zero(3), Mat::Identity(3, 3), 5.0, a), sample_mvt(Vec::Zero(3), Mat::Identity(3, 3), 5.0, b));
    EXPECT_EQ(sample_inv_wishart(Mat::Identity(2, 2), 6.0, a), sample_inv_wishart(Mat::Identity(2, 2), 6.0, b));
  }
}

TEST(Logsumexp, SmallCases) {
  EXPECT_EQ(logsumexp(std::vector<double>{0.0}), 0.0);
  EXPECT_NEAR(logsumexp(std::vector<double>{2.5, 2.5}), 2.5 + std::log(2.0), 1e-15);
  const double expect = -1000.0 + std::log1p(std::exp(-0.5));
  EXPECT_NEAR(logsumexp(std::vector<double>{-1000.0, -1000.5}), expect, 1e-12);
  EXPECT_THROW(logsumexp(std::vector<double>{}), Error);
}

TEST(Logsumexp, Bounds) {
  Rng rng(8);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> v(1 + rep % 9);
    for (double& x : v) x = -1e4 * std::uniform_real_distribution<double>()(rng);
    const double hi = *std::max_element(v.begin(), v.end());
    const double s = logsumexp(v);
    EXPECT_GE(s, hi);
    EXPECT_LE(s, hi + std::log(static_cast<double>(v.size())) + 1e-12);
  }
}

TEST(LogMeanExp, BatchedAgreesWithPlainMean) {
  std::vector<double> v;
  for (int i = 0; i < 200; ++i) v.push_back(std::sin(i * 0.3));
  const LogMeanEstimate e = log_mean_exp_batched(v, 20);
  EXPECT_NEAR(e.log_mean, log_mean_exp(v), 1e-14);
  EXPECT_GE(e.mc_se, 0.0);
}

TEST(PavFit, SmallCases) {
  const std::vector<double> s = {1, 2, 3};
  const std::vector<int> l = {1, 0, 1};
  const auto fit = pav_fit(s, l);
  EXPECT_NEAR(fit[0], 0.5, 1e-15);
  EXPECT_NEAR(fit[1], 0.5, 1e-15);
  EXPECT_NEAR(fit[2], 1.0, 1e-15);

  const std::vector<int> mono = {0, 0, 1};
  EXPECT_EQ(pav_fit(s, mono), (std::vector<double>{0, 0, 1}));
  const std::vector<int> ones = {1, 1, 1};
  EXPECT_EQ(pav_fit(s, ones), (std::vector<double>{1, 1, 1}));
  EXPECT_THROW(pav_fit(s, std::vector<int>{1, 0}), Error);
}

TEST(PavFit, MatchesBruteForceOnShortSequences) {
  Rng rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rep % 6;
    std::vector<double> s(n);
    std::vector<int> l(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(i);
      l[i] = static_cast<int>(rng() % 2);
      y[i] = l[i];
    }
    const auto fit = pav_fit(s, l);
    const auto best = oracle::brute_force_isotonic(y);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(fit[i], best[i], 1e-12);
  }
}

TEST(PavFit, UnsortedScoresAreFitInScoreOrder) {
  const std::vector<double> s = {3, 1, 2};
  const std::vector<int> l = {1, 1, 0};
  const auto fit = pav_fit(s, l);
  EXPECT_NEAR(fit[1], 0.5, 1e-15);
  EXPECT_NEAR(fit[2], 0.5, 1e-15);
  EXPECT_NEAR(fit[0], 1.0, 1e-15);
}

TEST(Seeds, SplitmixAndFnvAreStable) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_NE(splitmix64(0), splitmix64(1));
}
