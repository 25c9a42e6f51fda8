#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fidfac/csv_io.hpp"
#include "fidfac/data_model.hpp"
#include "fidfac/fixture.hpp"
#include "oracles.hpp"

using namespace fidfac;

namespace {

MeasurementPanel panel_of(const Mat& rows, std::string id = "S") { return {std::move(id), rows}; }

AlternativeDataset random_dataset(std::size_t n, Eigen::Index m, Eigen::Index p, Rng& rng) {
  AlternativeDataset d;
  for (std::size_t i = 0; i < n; ++i) {
    Mat rows(m, p);
    for (Eigen::Index k = 0; k < m; ++k) rows.row(k) = sample_std_normal(p, rng).transpose();
    d.sources.push_back(panel_of(rows, "S" + std::to_string(i)));
  }
  return d;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Generators, ZeroPivotsGiveTheMean) {
  SpecificParams params{Vec::LinSpaced(2, 1.0, 2.0), LowerTriFactor::identity(2)};
  const auto panel = generate_specific_from_pivots(params, Mat::Zero(4, 2));
  for (Eigen::Index k = 0; k < 4; ++k) EXPECT_EQ(panel.rows.row(k).transpose(), params.mu);
}

TEST(Generators, SpecificRoundTripRecoversParameters) {
  Mat a(2, 2);
  a << 1.0, 0.0, 0.5, 0.8;
  SpecificParams params{Vec::LinSpaced(2, -1.0, 3.0), LowerTriFactor(a)};
  Rng rng(5);
  const auto panel = generate_specific(params, 100000, rng);
  const auto est = estimate_specific_params(panel);
  EXPECT_LT((est.mu - params.mu).cwiseAbs().maxCoeff(), 0.02);
  const Mat aat = params.a.gram();
  EXPECT_LT((est.aat - aat).norm() / aat.norm(), 0.05);
}

TEST(Generators, AlternativeRoundTripRecoversParameters) {
  Mat b(2, 2), c(2, 2);
  b << 1.0, 0.0, 0.4, 0.7;
  c << 0.5, 0.0, -0.1, 0.3;
  AlternativeParams params{Vec::LinSpaced(2, 0.5, 1.5), LowerTriFactor(b), LowerTriFactor(c), 5.0};
  Rng rng(6);
  const auto data = generate_alternative(params, 10000, 50, rng);
  const auto est = estimate_alt_params(data);
  // sd of the grand mean is about sqrt(5/3) / 100 per coordinate
  EXPECT_LT((est.mu - params.mu).cwiseAbs().maxCoeff(), 0.06);
  EXPECT_LT((est.cct - params.c.gram()).norm() / params.c.gram().norm(), 0.05);
  const Mat target = 5.0 / 3.0 * params.b.gram();
  EXPECT_LT((est.bbt - target).norm() / target.norm(), 0.10);
}

TEST(Generators, SourceMeanCovarianceMatchesMomentIdentity) {
  Mat b(1, 1), c(1, 1);
  b << 2.0;
  c << 1.0;
  AlternativeParams params{Vec::Zero(1), LowerTriFactor(b), LowerTriFactor(c), 5.0};
  Rng rng(8);
  const auto data = generate_alternative(params, 40000, 3, rng);
  double s2 = 0.0;
  for (const auto& src : data.sources) s2 += src.mean()(0) * src.mean()(0);
  const double expect = 5.0 / 3.0 * 4.0 + 1.0 / 3.0;
  EXPECT_NEAR(s2 / 40000.0, expect, 0.05 * expect);
}

TEST(Generators, VanishingRandomEffectCollapsesSourceSpread) {
  Mat b = 1e-6 * Mat::Identity(1, 1);
  AlternativeParams params{Vec::Zero(1), LowerTriFactor(b), LowerTriFactor::identity(1), 5.0};
  Rng rng(9);
  const auto data = generate_alternative(params, 2000, 4, rng);
  double s2 = 0.0;
  for (const auto& src : data.sources) s2 += src.mean()(0) * src.mean()(0);
  EXPECT_NEAR(s2 / 2000.0, 0.25, 0.03);
}

TEST(Generators, PivotFormIsExact) {
  Mat b(2, 2), c(2, 2);
  b << 1.0, 0.0, 0.4, 0.7;
  c << 0.5, 0.0, -0.1, 0.3;
  AlternativeParams params{Vec::LinSpaced(2, 0.5, 1.5), LowerTriFactor(b), LowerTriFactor(c), 5.0};
  Mat t(2, 2);
  t << 1.0, -1.0, 0.5, 2.0;
  std::vector<Mat> v = {Mat::Ones(2, 2), Mat::Zero(1, 2)};
  const auto data = generate_alternative_from_pivots(params, t, v);
  ASSERT_EQ(data.n(), 2u);
  EXPECT_EQ(data.sources[1].count(), 1);
  const Vec expect = params.mu + b * t.row(0).transpose() + c * Vec::Ones(2);
  EXPECT_TRUE(data.sources[0].rows.row(1).transpose().isApprox(expect, 1e-15));
}

TEST(AltEstimates, IdenticalMeasurementsGiveZeroMatrices) {
  AlternativeDataset d;
  for (int i = 0; i < 3; ++i) d.sources.push_back(panel_of(Mat::Constant(2, 2, 1.5), "S" + std::to_string(i)));
  const auto est = estimate_alt_params(d);
  EXPECT_EQ(est.bbt.norm(), 0.0);
  EXPECT_EQ(est.cct.norm(), 0.0);
}

TEST(AltEstimates, SingleMeasurementSourcesLackReplication) {
  AlternativeDataset d;
  d.sources.push_back(panel_of(Mat::Constant(1, 1, 1.0), "a"));
  d.sources.push_back(panel_of(Mat::Constant(1, 1, 2.0), "b"));
  EXPECT_EQ(code_of([&] { estimate_alt_params(d); }), ErrorCode::InsufficientReplication);
}

TEST(AltEstimates, MatchesDirectSums) {
  Rng rng(12);
  const auto d = random_dataset(3, 2, 2, rng);
  const auto est = estimate_alt_params(d);
  Vec grand = Vec::Zero(2);
  for (const auto& s : d.sources)
    for (Eigen::Index k = 0; k < 2; ++k) grand += s.rows.row(k).transpose();
  grand /= 6.0;
  Mat between = Mat::Zero(2, 2), within = Mat::Zero(2, 2);
  for (const auto& s : d.sources) {
    Vec mean = (s.rows.row(0) + s.rows.row(1)).transpose() / 2.0;
    between += (mean - grand) * (mean - grand).transpose();
    for (Eigen::Index k = 0; k < 2; ++k) {
      const Vec r = s.rows.row(k).transpose() - mean;
      within += r * r.transpose();
    }
  }
  EXPECT_TRUE(est.mu.isApprox(grand, 1e-14));
  EXPECT_TRUE(est.bbt.isApprox(between / 2.0, 1e-13));
  EXPECT_TRUE(est.cct.isApprox(within / 5.0, 1e-13));
}

TEST(THats, ZeroAtTheGrandMeanAndScalarForm) {
  Rng rng(13);
  auto d = random_dataset(4, 3, 1, rng);
  const auto est = estimate_alt_params(d);
  const LowerTriFactor b = chol_factor(est.bbt);
  const auto t = estimate_t_hats(d, est.mu, b, est.cct);
  for (std::size_t i = 0; i < d.n(); ++i)
    EXPECT_NEAR(t[i](0), (d.sources[i].mean()(0) - est.mu(0)) / b.matrix()(0, 0), 1e-12);

  AlternativeDataset centered;
  centered.sources.push_back(panel_of(Mat::Constant(2, 2, 1.0), "a"));
  centered.sources.push_back(panel_of(Mat::Constant(2, 2, 1.0), "b"));
  const auto t0 = estimate_t_hats(centered, Vec::Ones(2), LowerTriFactor::identity(2), Mat::Identity(2, 2));
  EXPECT_EQ(t0[0].norm(), 0.0);
}

TEST(THats, ConsistentForLargeReplication) {
  Mat b(2, 2), c(2, 2);
  b << 1.0, 0.0, 0.3, 0.9;
  c << 0.4, 0.0, 0.1, 0.3;
  AlternativeParams params{Vec::Zero(2), LowerTriFactor(b), LowerTriFactor(c), 5.0};
  Rng rng(14);
  Mat t(20, 2);
  for (int i = 0; i < 20; ++i) t.row(i) = sample_std_t(2, 5.0, rng).transpose();
  std::vector<Mat> v;
  for (int i = 0; i < 20; ++i) {
    Mat vi(1000, 2);
    for (int k = 0; k < 1000; ++k) vi.row(k) = sample_std_normal(2, rng).transpose();
    v.push_back(vi);
  }
  const auto data = generate_alternative_from_pivots(params, t, v);
  const auto th = estimate_t_hats(data, params.mu, params.b, params.c.gram());
  double err = 0.0;
  for (int i = 0; i < 20; ++i) err += (th[static_cast<std::size_t>(i)] - t.row(i).transpose()).cwiseAbs().mean();
  EXPECT_LT(err / 20.0, 0.05);
}

TEST(SpecificEstimates, DirectComputation) {
  Mat rows(3, 2);
  rows << 1.0, 2.0, 2.0, 0.0, 4.0, 1.0;
  const auto est = estimate_specific_params(panel_of(rows));
  Vec mean(2);
  mean << 7.0 / 3.0, 1.0;
  Mat s = Mat::Zero(2, 2);
  for (int k = 0; k < 3; ++k) {
    const Vec r = rows.row(k).transpose() - mean;
    s += r * r.transpose();
  }
  EXPECT_TRUE(est.mu.isApprox(mean, 1e-15));
  EXPECT_TRUE(est.aat.isApprox(s / 2.0, 1e-14));

  const auto twin = estimate_specific_params(panel_of(Mat::Ones(2, 2)));
  EXPECT_EQ(twin.aat.norm(), 0.0);
  EXPECT_EQ(code_of([&] { estimate_specific_params(panel_of(Mat::Ones(1, 2))); }),
            ErrorCode::InsufficientReplication);
}

TEST(Screening, PicksTheLargestSpreadColumns) {
  Rng rng(15);
  Mat table(300, 6);
  const double sds[] = {0.001, 0.02, 0.005, 0.03, 0.0001, 0.02};
  for (Eigen::Index j = 0; j < 6; ++j)
    for (Eigen::Index i = 0; i < 300; ++i) table(i, j) = 2.0 + sds[j] * sample_std_normal(1, rng)(0);
  const Vec spread = unit_norm_spread(table);
  std::vector<int> order(6);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return spread(a) > spread(b); });
  std::vector<int> expect(order.begin(), order.begin() + 3);
  std::sort(expect.begin(), expect.end());
  EXPECT_EQ(preprocess_select_elements(table, 3), expect);
  EXPECT_EQ(preprocess_select_elements(table, 6), (std::vector<int>{0, 1, 2, 3, 4, 5}));
}

TEST(Screening, TiesGoToTheEarlierColumn) {
  Mat table(4, 3);
  table << 1, 1, 1, 2, 2, 2, 1, 1, 1, 2, 2, 2;
  EXPECT_EQ(preprocess_select_elements(table, 1), (std::vector<int>{0}));
}

TEST(Screening, InvariantToRescalingAColumn) {
  Rng rng(16);
  Mat table(100, 4);
  for (Eigen::Index j = 0; j < 4; ++j)
    for (Eigen::Index i = 0; i < 100; ++i) table(i, j) = 1.0 + 0.01 * (j + 1) * sample_std_normal(1, rng)(0);
  const auto base = preprocess_select_elements(table, 2);
  Mat scaled = table;
  scaled.col(0) *= 1000.0;
  scaled.col(3) *= 0.001;
  EXPECT_EQ(preprocess_select_elements(scaled, 2), base);
}

TEST(Screening, FixtureSelectsLeadAndRubidium) {
  const auto tables = make_fixture_tables(20190417);
  const std::vector<std::string> ten = {"Ti49", "Sr88", "K39", "Zr90", "Mn55", "Ba137", "Ce140", "La139", "Pb208", "Rb85"};
  std::vector<int> cols;
  for (const auto& e : ten)
    cols.push_back(static_cast<int>(std::find(tables.training.elements.begin(), tables.training.elements.end(), e) -
                                    tables.training.elements.begin()));
  Mat reduced(tables.training.rows(), 10);
  for (int j = 0; j < 10; ++j) reduced.col(j) = tables.training.values.col(cols[static_cast<std::size_t>(j)]);
  const auto picked = preprocess_select_elements(reduced, 2);
  EXPECT_EQ(picked, (std::vector<int>{8, 9}));
  const Vec spread = unit_norm_spread(reduced);
  EXPECT_GT(spread(9), spread(8));
}

TEST(Csv, RoundTripIsBitExact) {
  Rng rng(17);
  ElementTable t;
  t.elements = {"Pb208", "Rb85", "Zr90"};
  t.values.resize(5, 3);
  for (Eigen::Index i = 0; i < 5; ++i) {
    t.values.row(i) = sample_std_normal(3, rng).transpose() * 1e-3;
    t.values(i, 0) += 1.0 / 3.0;
    t.source_ids.push_back(i < 3 ? "W001" : "W002");
    t.fragment_ids.push_back(std::to_string(i + 1));
  }
  std::stringstream ss;
  write_element_csv(ss, t);
  const ElementTable back = parse_element_csv(ss, false);
  EXPECT_EQ(back.elements, t.elements);
  EXPECT_EQ(back.source_ids, t.source_ids);
  EXPECT_EQ(back.values, t.values);
  const auto panels = group_panels(back);
  ASSERT_EQ(panels.size(), 2u);
  EXPECT_EQ(panels[0].count(), 3);
}

TEST(Csv, MissingValueNamesTheCell) {
  std::stringstream ss("source_id,fragment_id,Pb208,Rb85\nW001,1,1.0,2.0\nW001,2,1.5,\n");
  try {
    parse_element_csv(ss, false, "bad.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaError);
    const std::string what = e.what();
    EXPECT_NE(what.find("Rb85"), std::string::npos) << what;
    EXPECT_NE(what.find("3"), std::string::npos) << what;
  }
}

TEST(Csv, LogTransformRejectsNonPositive) {
  std::stringstream ok("source_id,fragment_id,Pb208\nW001,1,2.0\n");
  EXPECT_NEAR(parse_element_csv(ok, true).values(0, 0), std::log(2.0), 1e-15);
  std::stringstream bad("source_id,fragment_id,Pb208\nW001,1,0\n");
  EXPECT_EQ(code_of([&] { parse_element_csv(bad, true); }), ErrorCode::NonPositiveConcentration);
}

TEST(Csv, FullTrainingLayoutIsAccepted) {
  const auto tables = make_fixture_tables(1);
  const auto path = (std::filesystem::temp_directory_path() / "fidfac_layout_test.csv").string();
  write_element_csv(path, tables.training);
  const ElementTable back = read_element_csv(path, false);
  std::filesystem::remove(path);
  EXPECT_EQ(back.rows(), 3 * 659);
  EXPECT_EQ(back.elements.size(), 18u);
  EXPECT_EQ(group_panels(back).size(), 659u);
}

TEST(CaseBundle, RejectsMixedDimensions) {
  CaseBundle b;
  b.specific = panel_of(Mat::Ones(3, 2));
  b.unknown = panel_of(Mat::Ones(2, 3));
  Rng rng(1);
  b.alternative = random_dataset(3, 2, 2, rng);
  EXPECT_THROW(b.validate(), Error);
}
