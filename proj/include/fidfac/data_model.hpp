#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fidfac/core_stats.hpp"

namespace fidfac {

enum class Hypothesis { Prosecution, Defense };

inline const char* to_string(Hypothesis h) { return h == Hypothesis::Prosecution ? "Hp" : "Hd"; }

/// Log-transformed concentrations for one source: one row per fragment
/// measurement, one column per element.
struct MeasurementPanel {
  std::string source_id;
  Mat rows;

  Eigen::Index count() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }
  Vec mean() const { return rows.colwise().mean().transpose(); }
  /// Throws SchemaError unless non-empty and finite.
  void validate() const;
};

struct AlternativeDataset {
  std::vector<MeasurementPanel> sources;

  std::size_t n() const { return sources.size(); }
  Eigen::Index total() const;
  Eigen::Index dim() const { return sources.empty() ? 0 : sources.front().dim(); }
  std::vector<Eigen::Index> counts() const;
  void validate() const;
};

struct SpecificParams {
  Vec mu;
  LowerTriFactor a;
};

struct AlternativeParams {
  Vec mu;
  LowerTriFactor b;
  LowerTriFactor c;
  double tau = 5.0;
};

struct CaseBundle {
  MeasurementPanel specific;
  MeasurementPanel unknown;
  AlternativeDataset alternative;
  std::optional<Hypothesis> truth;

  void validate() const;
};

/// Closed-form summaries of the alternative-source data.
struct AltEstimates {
  Vec mu;
  Mat bbt;  // between-source scatter of source means, divisor n - 1
  Mat cct;  // pooled within-source scatter, divisor N - 1
};

struct SpecificEstimates {
  Vec mu;
  Mat aat;  // divisor m - 1
};

// --- data-generating equations -------------------------------------------

/// Rows mu + A z_k for the supplied pivots (one z per row of `pivots`).
MeasurementPanel generate_specific_from_pivots(const SpecificParams& params, const Mat& pivots);
MeasurementPanel generate_specific(const SpecificParams& params, Eigen::Index m, Rng& rng);

/// Source i gets rows mu + B t_i + C v_{i,k}; `t` is n x p, `v[i]` is m_i x p.
AlternativeDataset generate_alternative_from_pivots(const AlternativeParams& params, const Mat& t,
                                                    const std::vector<Mat>& v);
AlternativeDataset generate_alternative(const AlternativeParams& params, const std::vector<Eigen::Index>& counts,
                                        Rng& rng);
AlternativeDataset generate_alternative(const AlternativeParams& params, std::size_t n, Eigen::Index m_each,
                                        Rng& rng);
/// One fresh source from the alternative population (T random effect).
MeasurementPanel generate_alternative_source(const AlternativeParams& params, Eigen::Index m, Rng& rng,
                                             std::string source_id = "new");

/// Gaussian random-effect variant (the model assumed by the BF and LR).
AlternativeDataset generate_alternative_gaussian(const Vec& mu, const Mat& bbt, const Mat& cct,
                                                 const std::vector<Eigen::Index>& counts, Rng& rng);

/// log density of one source's rows under the Gaussian random-effects model:
/// the stacked rows are N(1 (x) mu, J (x) BB' + I (x) CC').
double re_source_loglik(const MeasurementPanel& panel, const Vec& mu, const Mat& bbt, const Mat& cct);

// --- point estimators ------------------------------------------------------

AltEstimates estimate_alt_params(const AlternativeDataset& data);

/// Least-squares source effects t_i given plug-in mu, B and CC'.
std::vector<Vec> estimate_t_hats(const AlternativeDataset& data, const Vec& mu_hat, const LowerTriFactor& b_hat,
                                 const Mat& cct_hat);

SpecificEstimates estimate_specific_params(const MeasurementPanel& panel);

// --- element screening -----------------------------------------------------

/// Standard deviation of every column after rescaling it to unit Euclidean norm.
Vec unit_norm_spread(const Mat& table);

/// Indices (ascending, original order) of the p columns with the largest
/// unit-norm spread; ties go to the earlier column.
std::vector<int> preprocess_select_elements(const Mat& table, int p);

MeasurementPanel select_columns(const MeasurementPanel& panel, const std::vector<int>& columns);
AlternativeDataset select_columns(const AlternativeDataset& data, const std::vector<int>& columns);

/// Stack all rows of the dataset (source order).
Mat stack_rows(const AlternativeDataset& data);

}  // namespace fidfac
