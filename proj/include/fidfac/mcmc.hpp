#pragma once

// Adaptive random-walk Metropolis-Hastings over an unconstrained vector.
//
// Coordinates are updated block by block with Gaussian proposals. During
// burn-in each block's step multiplier follows a Robbins-Monro recursion on
// the log scale towards the target acceptance rate, and halfway through
// burn-in the per-coordinate base scales are reset from the empirical spread
// of the chain so far. Everything is frozen after burn-in.

#include <cstdint>
#include <vector>

#include "fidfac/core_stats.hpp"

namespace fidfac {

struct ChainConfig {
  long n_iter = 50000;
  long burn_in = 10000;
  long thin = 4;
  double target_accept = 0.3;
  std::uint64_t seed = 1;
  int init_attempts = 100;
};

/// Value of the chain target at a state: the sampling density (including any
/// change-of-variables terms) and the unnormalized fiducial density itself.
struct TargetValue {
  double log_target = -std::numeric_limits<double>::infinity();
  double log_q = -std::numeric_limits<double>::infinity();
};

struct ChainDiagnostics {
  double acceptance_rate = 0.0;  // post burn-in, over all block updates
  std::vector<double> block_acceptance;
  std::vector<double> block_multipliers;
  Vec base_scales;
  long n_iter = 0;
  long burn_in = 0;
  long thin = 1;
  int init_attempts_used = 0;
};

struct RwmhOutput {
  Mat states;  // one kept draw per row
  std::vector<long> iterations;
  Vec log_target;
  Vec log_q;
  ChainDiagnostics diagnostics;
};

using BlockLayout = std::vector<std::vector<int>>;

inline BlockLayout componentwise_blocks(int dim) {
  BlockLayout blocks(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) blocks[static_cast<std::size_t>(i)] = {i};
  return blocks;
}

namespace detail {

template <class Target>
TargetValue safe_eval(Target& target, const Vec& x) {
  try {
    TargetValue v = target(x);
    if (!std::isfinite(v.log_target)) v.log_target = -std::numeric_limits<double>::infinity();
    return v;
  } catch (const Error&) {
    return {};
  }
}

}  // namespace detail

/// Runs the sampler. `target` maps an unconstrained state to a TargetValue
/// and may throw fidfac::Error, which counts as a zero-density state.
template <class Target>
RwmhOutput run_adaptive_rwmh(const Vec& x0, const Vec& base_scales, const BlockLayout& blocks, Target&& target,
                             const ChainConfig& cfg) {
  if (cfg.n_iter <= cfg.burn_in || cfg.burn_in < 0 || cfg.thin < 1)
    throw Error(ErrorCode::InvalidArgument, "chain needs n_iter > burn_in >= 0 and thin >= 1");
  const Eigen::Index dim = x0.size();
  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  RwmhOutput out;
  Vec x = x0;
  TargetValue current = detail::safe_eval(target, x);
  int attempts = 0;
  while (!std::isfinite(current.log_target)) {
    if (++attempts > cfg.init_attempts)
      throw Error(ErrorCode::ChainInitializationFailed,
                  "no finite-density start found in " + std::to_string(cfg.init_attempts) + " attempts");
    for (Eigen::Index i = 0; i < dim; ++i) x(i) = x0(i) + base_scales(i) * normal(rng);
    current = detail::safe_eval(target, x);
  }
  out.diagnostics.init_attempts_used = attempts;

  Vec scales = base_scales;
  const std::size_t n_blocks = blocks.size();
  std::vector<double> log_mult(n_blocks, 0.0);
  std::vector<long> accepted(n_blocks, 0), proposed(n_blocks, 0);

  // running moments of the first half of burn-in for the base-scale reset
  const long reset_at = cfg.burn_in / 2;
  Vec run_sum = Vec::Zero(dim), run_sq = Vec::Zero(dim);
  long run_n = 0;

  const long kept = (cfg.n_iter - cfg.burn_in) / cfg.thin;
  out.states.resize(kept, dim);
  out.log_target.resize(kept);
  out.log_q.resize(kept);
  out.iterations.reserve(static_cast<std::size_t>(kept));
  Eigen::Index row = 0;

  Vec proposal = x;
  for (long it = 0; it < cfg.n_iter; ++it) {
    const bool adapting = it < cfg.burn_in;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      proposal = x;
      const double mult = std::exp(log_mult[b]);
      for (int i : blocks[b]) proposal(i) += mult * scales(i) * normal(rng);
      const TargetValue cand = detail::safe_eval(target, proposal);
      const double log_ratio = cand.log_target - current.log_target;
      const bool accept = std::isfinite(cand.log_target) && (log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio);
      if (accept) {
        x.swap(proposal);
        current = cand;
      }
      if (adapting) {
        const double gain = std::min(0.5, 4.0 / std::pow(static_cast<double>(it) + 8.0, 0.6));
        log_mult[b] += gain * ((accept ? 1.0 : 0.0) - cfg.target_accept);
        log_mult[b] = std::clamp(log_mult[b], -30.0, 30.0);
      } else {
        ++proposed[b];
        if (accept) ++accepted[b];
      }
    }
    if (adapting && it < reset_at) {
      run_sum += x;
      run_sq += x.cwiseProduct(x);
      ++run_n;
    }
    if (adapting && it + 1 == reset_at && run_n > 50) {
      for (Eigen::Index i = 0; i < dim; ++i) {
        const double mean = run_sum(i) / static_cast<double>(run_n);
        const double var = run_sq(i) / static_cast<double>(run_n) - mean * mean;
        if (var > 0.0 && std::isfinite(var)) {
          scales(i) = std::sqrt(var);
        }
      }
      for (std::size_t b = 0; b < n_blocks; ++b)
        log_mult[b] = std::log(2.38 / std::sqrt(static_cast<double>(blocks[b].size())));
    }
    if (!adapting && (it - cfg.burn_in) % cfg.thin == cfg.thin - 1 && row < kept) {
      out.states.row(row) = x.transpose();
      out.log_target(row) = current.log_target;
      out.log_q(row) = current.log_q;
      out.iterations.push_back(it + 1);
      ++row;
    }
  }

  ChainDiagnostics& d = out.diagnostics;
  long acc_total = 0, prop_total = 0;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    acc_total += accepted[b];
    prop_total += proposed[b];
    d.block_acceptance.push_back(proposed[b] ? static_cast<double>(accepted[b]) / static_cast<double>(proposed[b]) : 0.0);
    d.block_multipliers.push_back(std::exp(log_mult[b]));
  }
  d.acceptance_rate = prop_total ? static_cast<double>(acc_total) / static_cast<double>(prop_total) : 0.0;
  d.base_scales = scales;
  d.n_iter = cfg.n_iter;
  d.burn_in = cfg.burn_in;
  d.thin = cfg.thin;
  return out;
}

}  // namespace fidfac
