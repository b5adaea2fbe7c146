#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "swfdr/em.hpp"

namespace swfdr {

struct StratumEstimate {
  std::string journal;
  int year = 0;
  double pi0_hat = 0.0;
  double sd = 0.0;
  int n_obs = 0;
};

struct SkippedStratum {
  std::string journal;
  int year = 0;
  int n_obs = 0;
};

struct Stratum {
  std::string journal;
  int year = 0;
  std::vector<Observation> observations;
};

struct StratumOptions {
  int min_stratum_size = 30;
  /// Bootstrap replicates per stratum for the sd column; 0 leaves sd at 0.
  int bootstrap_B = 0;
  std::uint64_t seed = 0;
  EMConfig em;
};

struct StratumResult {
  std::vector<StratumEstimate> estimates;
  std::vector<SkippedStratum> skipped;
};

/// One EM fit per (journal, year) stratum; strata below the minimum size
/// are skipped with a diagnostic. Throws DataError when every stratum is
/// undersized.
StratumResult estimate_by_stratum(std::span<const Stratum> strata,
                                  const StratumOptions& options = {});

/// Group classified observations into (journal, year) strata, ordered by
/// journal then year.
std::vector<Stratum> group_strata(
    std::span<const std::tuple<std::string, int, Observation>> rows);

struct TrendPoint {
  std::string journal;
  double x = 0.0;
  double y = 0.0;
};

/// Random-intercept linear mixed model y = b0 + b1*x + u_journal + eps,
/// fitted by REML with the variance ratio lambda = var_u/var_eps profiled
/// in one dimension.
struct TrendFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;
  double slope_pvalue = 1.0;
  double var_random = 0.0;
  double var_resid = 0.0;
  double lambda = 0.0;
  double reml = 0.0;
  int n_groups = 0;
  int n_points = 0;
};

TrendFit fit_mixed_model(std::span<const TrendPoint> points);

/// REML objective at a fixed variance ratio (exposed for verification
/// against grid search).
double reml_objective(std::span<const TrendPoint> points, double lambda);

/// Submissions table keyed by (journal, year).
using SubmissionsTable = std::map<std::pair<std::string, int>, double>;

SubmissionsTable read_submissions_csv(std::istream& in);

}  // namespace swfdr
