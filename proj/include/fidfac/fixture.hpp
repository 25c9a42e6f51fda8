#pragma once

// Synthetic float-glass-like element tables: a training table of n sources
// with 3 fragments each and a calibration table of sources with 5 fragments.
// Values are already on the log scale.

#include <cstdint>
#include <string>
#include <vector>

#include "fidfac/csv_io.hpp"

namespace fidfac {

struct ElementProfile {
  std::string name;
  double mean;        // log concentration
  double between_sd;  // scale of the t_5 source effect
  double within_sd;
};

/// The 18 elements of the synthetic table.
const std::vector<ElementProfile>& fixture_profiles();

struct FixtureTables {
  ElementTable training;
  ElementTable calibration;
};

struct FixtureShape {
  std::size_t n_training = 659;
  Eigen::Index m_training = 3;
  std::size_t n_calibration = 320;
  Eigen::Index m_calibration = 5;
  double between_correlation = 0.8;
};

FixtureTables make_fixture_tables(std::uint64_t seed, const FixtureShape& shape = {});

}  // namespace fidfac
