#pragma once

#include <string>
#include <vector>

#include "fidfac/data_model.hpp"

namespace fidfac {

struct SpecificMle {
  Vec mu;
  Mat aat;  // divisor m
  double log_lik = 0.0;
};

/// Gaussian random-effects parameters (mu_a, BB', CC').
struct GaussianAltParams {
  Vec mu;
  Mat bbt;
  Mat cct;
};

struct AlternativeMle {
  GaussianAltParams params;
  double log_lik = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> history;  // log-likelihood after each EM iteration
};

struct EmConfig {
  int max_iter = 500;
  double tol = 1e-8;
};

/// Closed-form MLE; DegenerateSample when the scatter is singular after jitter.
SpecificMle mle_specific(const MeasurementPanel& panel);

/// log-likelihood of rows under N_p(mu, AA').
double specific_loglik(const MeasurementPanel& panel, const Vec& mu, const Mat& aat);

/// Sum over sources of the Gaussian random-effects marginal log density.
double alt_marginal_loglik(const AlternativeDataset& data, const Vec& mu, const Mat& bbt, const Mat& cct);
double alt_marginal_loglik(const AlternativeDataset& data, const GaussianAltParams& params);

AlternativeMle mle_alternative(const AlternativeDataset& data, const EmConfig& config = {});

/// Eigenvalues below zero are floored at zero.
Mat project_psd(const Mat& s);

struct LrResult {
  bool ok = false;
  double log10_lr = 0.0;
  std::string failure;  // error code name when !ok
  double log_num_specific = 0.0;  // log f_s(y_s, y_u | theta_s*)
  double log_den_specific = 0.0;  // log f_s(y_s | theta_s)
  double log_num_alt = 0.0;       // log f_a(y_a | theta_a)
  double log_den_alt = 0.0;       // log f_a(y_a, y_u | theta_a*)
  bool em_converged = true;
};

/// Never throws for fit failures; they are reported through `ok`/`failure`.
LrResult compute_lr(const CaseBundle& bundle, const EmConfig& config = {});

std::string to_json(const LrResult& result);

}  // namespace fidfac
