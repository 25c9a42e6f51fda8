#pragma once

// Simulation design configuration. A JSON file overrides the preset chosen
// by (design, scale); every engine default lives here.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fidfac/bf_engine.hpp"
#include "fidfac/gff_engine.hpp"
#include "fidfac/lr_engine.hpp"
#include "fidfac/mcmc.hpp"

namespace fidfac {

enum class Scale { Paper, Desk };

Scale parse_scale(const std::string& name);
const char* to_string(Scale scale);

struct DataConfig {
  std::string training_csv;     // alternative-source table; empty means the synthetic fixture
  std::string calibration_csv;  // specific/unknown table; empty means the synthetic fixture
  bool log_transform = false;
  std::vector<std::string> elements;  // candidate columns for screening; empty means all
  int p = 2;
  int specific_seed_rows = 3;
  double quantum = 0.0;  // > 0 rounds every generated measurement to this grid
  std::uint64_t fixture_seed = 20190417;
};

struct DesignConfig {
  int design = 1;
  Scale scale = Scale::Desk;
  std::uint64_t master_seed = 1;
  std::string output_dir = "fidfac_out";

  std::size_t n = 100;  // alternative sources per trial
  Eigen::Index m = 150;
  Eigen::Index m_i = 3;
  Eigen::Index m_u = 2;
  int n_hp_trials = 60;
  int n_hd_trials = 200;
  long first_trial = 0;  // run only trials in [first_trial, last_trial)
  long last_trial = -1;  // -1 means all

  DataConfig data;
  ChainConfig chain_s;
  ChainConfig chain_a;
  GffConfig gff;
  BfConfig bf;
  PriorKnobs prior_p = PriorKnobs::preset(PriorFlavor::Prosecution);
  PriorKnobs prior_d = PriorKnobs::preset(PriorFlavor::Defense);
  EmConfig em;
  bool run_gff = true;
  bool run_bf = true;
  bool run_lr = true;
  int threads = 1;

  long total_trials() const { return static_cast<long>(n_hp_trials) + n_hd_trials; }
  /// Throws ConfigError on any inconsistency.
  void validate() const;
};

/// Defaults for a design at the given scale.
DesignConfig preset_config(int design, Scale scale);

/// Applies the keys present in `j` on top of `base`; unknown keys are errors.
DesignConfig apply_overrides(DesignConfig base, const nlohmann::json& j);

/// preset_config(design, scale) overridden by the JSON file at `path` (if non-empty).
DesignConfig load_config(const std::string& path, int design, Scale scale);

nlohmann::ordered_json to_json(const DesignConfig& cfg);

}  // namespace fidfac
