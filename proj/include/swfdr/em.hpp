#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swfdr/model.hpp"

namespace swfdr {

struct EMConfig {
  int max_iters = 10000;
  double loglik_tol = 1e-8;
  double m_step_tol = 1e-6;
  // The init shape must satisfy the M-step's identifiability floor on
  // the alternative's mass below alpha; Beta(1, 20) places 0.64 there.
  MixtureParams init{0.5, BetaShape(1.0, 20.0)};
  int min_observations = 10;
  /// When false, the M-step keeps the alternative shape at init.shape and
  /// only pi0 is iterated. The mixture has a likelihood ridge along which
  /// pi0 trades off against the shape's tail flatness, so the joint fit
  /// of (pi0, a, b) carries far more sampling variability than the fit
  /// with a known or externally supplied shape; pinning the shape is the
  /// appropriate mode whenever it is available from prior study.
  bool estimate_shape = true;
  /// Iteration cap for each bootstrap resample refit (warm-started at the
  /// full-data estimate, so only local movement is wanted).
  int resample_max_iters = 200;
};

struct EMResult {
  MixtureParams params;
  std::vector<double> loglik_trace;
  int iterations = 0;
  bool converged = false;
  /// Set when the fitted shape is within 0.05 of (1,1): the alternative
  /// component is indistinguishable from the null and pi0 is
  /// unidentifiable.
  bool shape_near_uniform = false;
};

/// Posterior probability that each observation came from the null
/// (uniform) component.
std::vector<double> e_step(std::span<const Observation> observations,
                           const MixtureParams& params);

/// pi0 = mean weight; (a,b) by Nelder-Mead on (log a, log b) maximizing
/// the weighted alternative-component objective, accepted only if it does
/// not decrease it (GEM safeguard).
MixtureParams m_step(std::span<const Observation> observations,
                     std::span<const double> weights,
                     const MixtureParams& current,
                     double m_step_tol = 1e-6,
                     bool estimate_shape = true);

EMResult run_em(std::span<const Observation> observations,
                const EMConfig& config = EMConfig{});

struct BootstrapResult {
  double point = 0.0;
  double sd = 0.0;
  std::vector<double> resample_estimates;
  int B = 0;
  std::uint64_t seed = 0;
  int skipped = 0;
};

/// Nonparametric bootstrap of pi0: B resamples with replacement, each
/// refit warm-started at the full-data estimate. Per-resample RNG streams
/// are derived from (seed, index), so serial and parallel execution give
/// identical results.
BootstrapResult bootstrap_sd(std::span<const Observation> observations, int B,
                             std::uint64_t seed,
                             const EMConfig& config = EMConfig{},
                             int threads = 1);

}  // namespace swfdr
