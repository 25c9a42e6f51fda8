#pragma once

// Discrimination and calibration summaries of log10 evidence values.
// The AUC distribution and calibration bands are bootstrap approximations.

#include <string>
#include <vector>

#include "fidfac/core_stats.hpp"

namespace fidfac {

struct ScoreBatch {
  std::vector<double> hp;  // log10 values for trials whose truth is H_p
  std::vector<double> hd;
  std::string method;

  /// EmptyClass when a class is empty; InvalidArgument on NaN.
  void validate() const;
};

/// P(hp > hd) + 0.5 P(tie), via midranks.
double empirical_auc(const ScoreBatch& batch);

/// Sorted AUCs of `n_resamples` bootstrap resamples of both classes.
std::vector<double> auc_distribution(const ScoreBatch& batch, int n_resamples, Rng& rng);

struct CalibrationConfig {
  int grid_size = 41;
  int n_boot = 400;
  double level = 0.95;
  double min_local_count = 1.0;
};

struct CalibrationCurve {
  Vec grid;
  Vec median;
  Vec pointwise_lo, pointwise_hi;
  Vec simultaneous_lo, simultaneous_hi;
};

/// Gaussian KDE with Silverman's bandwidth.
class Kde {
 public:
  explicit Kde(std::vector<double> sample);
  double bandwidth() const { return h_; }
  double density(double v) const;
  /// sum_i exp(-(v - x_i)^2 / (2 h^2)): the number of points "near" v.
  double local_count(double v) const;
  std::size_t size() const { return x_.size(); }

 private:
  std::vector<double> x_;
  double h_;
};

/// Interval-valued discrepancy log10(f_p(v) / f_d(v)) - v. When a class has
/// fewer than `min_local_count` points near v its density is only bounded
/// above (by one pseudo-count), so the corresponding side of the interval is
/// infinite. `point` is the finite end (or the bounded value when both ends are).
struct DiscrepancyValue {
  double lo;
  double point;
  double hi;
};
DiscrepancyValue discrepancy_at(const Kde& hp, const Kde& hd, double v, double min_local_count = 1.0);

/// InsufficientData unless both classes have >= 20 values.
CalibrationCurve calibration_discrepancy(const ScoreBatch& batch, const CalibrationConfig& config, Rng& rng);

struct EceCurves {
  Vec prior_log10_odds;
  Vec prior_prob;
  Vec observed;
  Vec calibrated;
  Vec null_curve;
};

/// ECE at one prior log10 odds for log10 evidence values.
double ece_value(std::span<const double> hp, std::span<const double> hd, double prior_log10_odds);

/// log10 of the PAV-recalibrated evidence values (hp first, then hd).
void pav_calibrated_scores(const ScoreBatch& batch, std::vector<double>& hp_out, std::vector<double>& hd_out);

EceCurves ece_curve(const ScoreBatch& batch, const Vec& prior_log10_odds_grid);

/// -2.5 to 2.5 in 101 steps.
Vec default_prior_grid();

/// Type-7 sample quantile of an unsorted list.
double quantile(std::vector<double> values, double prob);

}  // namespace fidfac
