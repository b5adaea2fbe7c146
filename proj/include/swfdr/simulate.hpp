#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "swfdr/model.hpp"
#include "swfdr/parser.hpp"

namespace swfdr {

struct SimConfig {
  int n = 0;
  MixtureParams true_params{0.5, BetaShape(1.0, 10.0)};
  double censor_frac = 0.0;
  double round_frac = 0.0;
  std::uint64_t seed = 0;
};

/// One simulated report plus its hidden ground truth.
struct SimulatedDatum {
  Observation obs;
  bool from_null = false;
  double hidden_p = 0.0;
};

/// Draw n reported P-values from the mixture: Bernoulli(pi0) picks the
/// component, then the reporting style (rounded with probability
/// round_frac, else censored with probability censor_frac, else exact).
/// Censoring bounds come from {0.001, 0.01, 0.05}. Deterministic per seed.
std::vector<SimulatedDatum> simulate_observations(const SimConfig& config);

struct TheoreticalInputs {
  double prior_true;
  double alpha_level;
  double power;
};

/// Fraction of significant results that are false positives implied by a
/// pre-study truth probability, significance level, and power:
/// (1-prior)*alpha / ((1-prior)*alpha + prior*power).
double theoretical_swfdr(const TheoreticalInputs& inputs);

/// Render simulated data as P-value records so a simulated corpus flows
/// through the same CSV path as extracted text.
std::vector<PValueRecord> to_records(std::span<const SimulatedDatum> data,
                                     const std::string& journal = "simulated",
                                     int year = 2000);

}  // namespace swfdr
