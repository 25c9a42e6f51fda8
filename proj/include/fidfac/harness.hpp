#pragma once

// Trial orchestration for the three simulation designs, result persistence
// and plot-data emission.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fidfac/config.hpp"
#include "fidfac/csv_io.hpp"
#include "fidfac/diagnostics.hpp"

namespace fidfac {

inline constexpr const char* kCodeVersion = "fidfac 0.1.0";

/// Counter-based seed: splitmix64(master + golden * (trial_id + 1)).
std::uint64_t derive_trial_seed(std::uint64_t master_seed, long trial_id);

/// Independent sub-seed for one engine within a trial.
std::uint64_t derive_engine_seed(std::uint64_t trial_seed, std::string_view engine);

/// Everything a trial needs that does not change from trial to trial.
struct PreparedDesign {
  std::vector<std::string> elements;  // screened, in table order
  AlternativeParams truth;            // designs 1-2
  std::vector<SpecificParams> specifics;  // designs 1-2, one per calibration source
  AlternativeDataset training;            // design 3
  std::vector<MeasurementPanel> cal_specific;  // design 3
  std::vector<MeasurementPanel> cal_unknown;   // design 3
  std::vector<std::string> cal_ids;

  std::size_t n_calibration() const { return cal_ids.size(); }
};

/// Loads (or synthesizes) the tables, screens elements and builds the
/// population and calibration-source parameters.
PreparedDesign prepare_design(const DesignConfig& config);
PreparedDesign prepare_design(const DesignConfig& config, const ElementTable& training,
                              const ElementTable& calibration);

struct EngineOutcome {
  std::optional<double> value;  // log10 evidence value
  std::string failure;          // error code name, "disabled", or empty
  double seconds = 0.0;
};

struct TrialResult {
  long trial_id = 0;
  Hypothesis truth = Hypothesis::Prosecution;
  std::uint64_t seed = 0;
  std::string specific_source;
  std::string unknown_source;
  EngineOutcome gff, bf_p, bf_d, lr;
};

inline constexpr const char* kResultsHeader =
    "trial_id,truth,seed,specific_source,unknown_source,log10_gff,gff_failure,log10_bf_p,bf_p_failure,"
    "log10_bf_d,bf_d_failure,log10_lr,lr_failure";
inline constexpr const char* kTimingsHeader = "trial_id,gff_seconds,bf_p_seconds,bf_d_seconds,lr_seconds";

/// Trials [0, n_hp) are H_p, the rest H_d.
Hypothesis trial_truth(const DesignConfig& config, long trial_id);

/// The data of one trial, before any engine runs.
CaseBundle build_trial_case(const DesignConfig& config, const PreparedDesign& design, long trial_id,
                            std::uint64_t trial_seed);

/// Runs every enabled engine; engine failures are recorded, never thrown.
TrialResult run_trial(const DesignConfig& config, const PreparedDesign& design, long trial_id);
TrialResult evaluate_case(const DesignConfig& config, const CaseBundle& bundle, std::uint64_t seed);

struct RunSummary {
  std::string results_path;
  std::string manifest_path;
  long trials_run = 0;
  long trials_resumed = 0;
  std::map<std::string, long> failures;  // per method
};

using TrialCallback = std::function<void(const TrialResult&)>;

/// Runs (or resumes) every trial in the configured range, appending to
/// results.csv in trial order, then writes manifest.json.
RunSummary run_design(const DesignConfig& config, const TrialCallback& on_trial = {});
RunSummary run_design(const DesignConfig& config, const PreparedDesign& design, const TrialCallback& on_trial = {});

std::string format_result_row(const TrialResult& r);
std::vector<TrialResult> read_results_csv(const std::string& path);
void write_results_csv(const std::string& path, const std::vector<TrialResult>& results);

inline const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"gff", "bf_p", "bf_d", "lr"};
  return names;
}

/// Scores per method after dropping every trial where any active method
/// failed. A method is active when at least one trial was not disabled.
std::map<std::string, ScoreBatch> build_batches(const std::vector<TrialResult>& results);

enum class PlotKind { Boxplot, Auc, Calibration, Ece };
PlotKind parse_plot_kind(const std::string& name);

struct PlotOptions {
  int auc_resamples = 1000;
  CalibrationConfig calibration;
  std::uint64_t seed = 1;
};

/// Writes the CSV files for one figure kind into `out_dir`; returns their paths.
/// EmptyResults when there are no usable trials.
std::vector<std::string> emit_plot_data(const std::vector<TrialResult>& results, PlotKind kind,
                                        const std::string& out_dir, const PlotOptions& options = {});

/// Rounds every entry to the nearest multiple of `quantum`.
void round_to_quantum(Mat& values, double quantum);

}  // namespace fidfac
