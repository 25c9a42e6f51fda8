#include "fidfac/fixture.hpp"

#include <cstdio>

namespace fidfac {

const std::vector<ElementProfile>& fixture_profiles() {
  static const std::vector<ElementProfile> profiles = {
      {"Li7", 1.2, 0.0005, 0.0002},    {"Na23", 11.3, 0.0012, 0.0004},   {"Mg25", 10.0, 0.0011, 0.0004},
      {"Al27", 8.3, 0.0015, 0.0006},   {"K39", 7.5, 0.0005, 0.0002},     {"Ca42", 11.1, 0.0010, 0.0004},
      {"Ti49", 5.6, 0.00002, 0.00002}, {"Mn55", 3.5, 0.0003, 0.0001},   {"Fe57", 6.4, 0.0030, 0.001},
      {"Rb85", 1.4, 0.0063, 0.002},   {"Sr88", 4.0, 0.0003, 0.0001},   {"Zr90", 3.7, 0.0003, 0.0001},
      {"Sn118", 2.0, 0.0015, 0.0006},  {"Ba137", 3.5, 0.0006, 0.0002},   {"La139", 0.8, 0.0020, 0.0006},
      {"Ce140", 1.2, 0.0026, 0.0008},  {"Hf178", 0.5, 0.0008, 0.0004},   {"Pb208", 1.6, 0.0065, 0.002},
  };
  return profiles;
}

namespace {

std::string padded_id(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%03zu", prefix, i + 1);
  return buf;
}

ElementTable make_table(char prefix, std::size_t n, Eigen::Index m, const Mat& between_chol, Rng& rng) {
  const auto& prof = fixture_profiles();
  const Eigen::Index q = static_cast<Eigen::Index>(prof.size());
  ElementTable table;
  for (const auto& e : prof) table.elements.push_back(e.name);
  table.values.resize(static_cast<Eigen::Index>(n) * m, q);
  Vec mean(q), bsd(q), wsd(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    mean(j) = prof[static_cast<std::size_t>(j)].mean;
    bsd(j) = prof[static_cast<std::size_t>(j)].between_sd;
    wsd(j) = prof[static_cast<std::size_t>(j)].within_sd;
  }
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec t = between_chol * sample_std_t(q, 5.0, rng);
    const Vec center = mean + bsd.cwiseProduct(t);
    for (Eigen::Index k = 0; k < m; ++k, ++row) {
      table.values.row(row) = (center + wsd.cwiseProduct(sample_std_normal(q, rng))).transpose();
      table.source_ids.push_back(padded_id(prefix, i));
      table.fragment_ids.push_back(std::to_string(k + 1));
    }
  }
  return table;
}

}  // namespace

FixtureTables make_fixture_tables(std::uint64_t seed, const FixtureShape& shape) {
  const Eigen::Index q = static_cast<Eigen::Index>(fixture_profiles().size());
  const double rho = shape.between_correlation;
  const Mat corr = (1.0 - rho) * Mat::Identity(q, q) + rho * Mat::Ones(q, q);
  const Mat chol = corr.llt().matrixL();
  Rng rng(seed);
  FixtureTables out;
  out.training = make_table('W', shape.n_training, shape.m_training, chol, rng);
  out.calibration = make_table('C', shape.n_calibration, shape.m_calibration, chol, rng);
  return out;
}

}  // namespace fidfac
