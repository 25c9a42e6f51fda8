#pragma once

// Bayes factor under conjugate priors, computed as the defense-posterior
// expectation of f_s(y_u | theta_s) / f_a(y_u | theta_a) with a Gibbs sampler
// on the alternative data augmented by the unknown panel.

#include <cstdint>
#include <string>
#include <vector>

#include "fidfac/data_model.hpp"

namespace fidfac {

struct PriorSpec {
  Vec mu_pi;
  Mat sigma_b;
  Mat sigma_e;
  double nu_b = 0.0;
  double nu_e = 0.0;
  double k = 1.0;
  std::string label;

  /// Throws NotPositiveDefinite / InvalidDegreesOfFreedom / LengthMismatch.
  void validate() const;
};

enum class PriorFlavor { Prosecution, Defense };

PriorFlavor parse_prior_flavor(const std::string& name);
const char* to_string(PriorFlavor flavor);

/// Tunable numbers behind a preset. Non-positive degrees of freedom mean p + 2.
struct PriorKnobs {
  double sigma_b_scale = 1.0;  // Sigma_b = scale * BB'_hat
  double nu_b = 0.0;
  double nu_e = 0.0;
  double k = 1.0;

  static PriorKnobs preset(PriorFlavor flavor);
};

/// mu_pi = mu_hat, Sigma_b = scale * BB'_hat, Sigma_e = CC'_hat (nu_e - p - 1).
PriorSpec prior_from_knobs(const PriorKnobs& knobs, const AltEstimates& summaries, std::string label);

/// Preset hyperparameters built from the closed-form alternative summaries.
PriorSpec prior_preset(PriorFlavor flavor, const AltEstimates& summaries);

/// `AsDisplayed` uses the printed mu_a and BB' conditionals verbatim;
/// `Exact` uses the full conditionals of the stated hierarchical model.
enum class GibbsScheme { Exact, AsDisplayed };

GibbsScheme parse_gibbs_scheme(const std::string& name);
const char* to_string(GibbsScheme scheme);

/// Data seen by the defense-posterior sampler.
struct BfData {
  MeasurementPanel specific;
  MeasurementPanel unknown;
  AlternativeDataset augmented;  // alternative sources followed by the unknown panel

  static BfData from_case(const CaseBundle& bundle);
};

struct GibbsState {
  Vec mu_s;
  Mat aat;
  Vec mu_a;
  Mat bbt;
  Mat cct;
  std::vector<Vec> bt;  // one source effect per augmented source
  std::vector<Mat> cv;  // within-source residuals y_ik - mu_a - bt_i

  static GibbsState initial(const BfData& data);
};

struct NormalParams {
  Vec mean;
  Mat cov;
};

struct InvWishartParams {
  Mat scale;
  double df = 0.0;
};

NormalParams mu_s_conditional(const BfData& data, const GibbsState& state, const PriorSpec& prior);
InvWishartParams aat_conditional(const BfData& data, const GibbsState& state, const PriorSpec& prior);
NormalParams mu_a_conditional(const BfData& data, const GibbsState& state, const PriorSpec& prior, GibbsScheme scheme);
/// Full conditional of source i's effect given mu_a, BB', CC' and the data.
NormalParams latent_conditional(const BfData& data, const GibbsState& state, std::size_t source);
InvWishartParams bbt_conditional(const BfData& data, const GibbsState& state, const PriorSpec& prior,
                                 GibbsScheme scheme);
InvWishartParams cct_conditional(const BfData& data, const GibbsState& state, const PriorSpec& prior);

/// Redraws every source effect and the implied residuals. Each source uses
/// its own stream keyed by its source_id.
void latent_conditionals(GibbsState& state, const BfData& data, Rng& rng);

/// One sweep: mu_s, AA', mu_a, CV, BB', BT, CC'.
void gibbs_step(GibbsState& state, const BfData& data, const PriorSpec& prior, GibbsScheme scheme, Rng& rng);

struct BfConfig {
  long sweeps = 20000;
  long burn_in = 5000;
  GibbsScheme scheme = GibbsScheme::Exact;
  int batches = 20;
  std::uint64_t seed = 1;
};

struct BfResult {
  double log10_bf = 0.0;
  double mc_se = 0.0;  // natural-log scale
  long n_sweeps = 0;
  std::string prior_label;
};

/// Per-sweep log f_s(y_u | theta_s) - log f_a(y_u | theta_a).
double bf_log_ratio(const MeasurementPanel& unknown, const GibbsState& state);

BfResult compute_bf(const CaseBundle& bundle, const PriorSpec& prior, const BfConfig& config);

std::string to_json(const BfResult& result, const PriorSpec& prior, const BfConfig& config);

}  // namespace fidfac
