#pragma once

#include <array>
#include <span>
#include <vector>

#include "swfdr/numerics.hpp"

namespace swfdr {

inline constexpr double kDefaultAlpha = 0.05;

/// Rounding intervals partitioning [0, 0.05]: values printed as one of
/// 0, 0.01, ..., 0.05 are modeled as multinomial draws over these bins.
namespace bins {

inline constexpr int kCount = 6;
inline constexpr std::array<double, kCount + 1> kEdges = {
    0.0, 0.005, 0.015, 0.025, 0.035, 0.045, 0.05};

double lower(int bin);
double upper(int bin);
double width(int bin);

/// Bin whose interval contains p (p in [0, 0.05]).
int bin_for(double p);

/// The reported round value for a bin: 0.00, 0.01, ..., 0.05.
double round_value(int bin);

}  // namespace bins

enum class ObsKind { Exact, Censored, Rounded };

/// One model-ready datum: an exactly reported P-value, a censored report
/// ("P < c"), or a rounded report mapped to its rounding bin.
struct Observation {
  ObsKind kind;
  double value = 0.0;  // Exact: p; Censored: upper bound
  bool strict = false; // Censored: "<" vs "<=" (provenance only)
  int bin = -1;        // Rounded

  static Observation exact(double p, double alpha = kDefaultAlpha);
  static Observation censored(double bound, bool strict,
                              double alpha = kDefaultAlpha);
  static Observation rounded(int bin);
};

/// Parameters of the two-component mixture: a uniform null on (0, alpha]
/// with weight pi0 and a truncated Beta alternative with weight 1 - pi0.
struct MixtureParams {
  double pi0;
  BetaShape shape;
  double alpha = kDefaultAlpha;

  MixtureParams(double pi0_, BetaShape shape_, double alpha_ = kDefaultAlpha);
};

/// Mixture density at p in (0, alpha].
double mixture_pdf(double p, const MixtureParams& params);

/// Mixture CDF at c in [0, alpha]; equals 1 at c = alpha.
double mixture_cdf(double c, const MixtureParams& params);

/// Probability the mixture assigns to rounding bin `bin`; the six values
/// sum to 1.
double bin_probability(int bin, const MixtureParams& params);

/// Conventional reporting thresholds for censored P-values ("P < c").
/// A bound partitions (0, alpha] into intervals at these thresholds: a
/// report "P < c" is modeled as the event that p falls between the
/// largest threshold below c and c itself. Treating the bound instead as
/// a plain left-censoring event P(p <= c) double-counts the mass below
/// the smaller thresholds and biases pi0 downward whenever authors
/// report the tightest applicable bound.
namespace censoring {

inline constexpr std::array<double, 3> kThresholds = {0.001, 0.01, 0.05};

/// The lower edge of the reporting interval for a bound: the largest
/// threshold strictly below `bound`, or 0 when there is none.
double interval_lower(double bound);

}  // namespace censoring

/// Probability that a censored report carries bound `c`: the mixture
/// mass of the reporting interval (interval_lower(c), c].
double censored_mass(double bound, const MixtureParams& params);

/// Observed-data log-likelihood: Exact contributes log pdf, Censored the
/// log mass of its reporting interval, Rounded log bin probability.
/// Throws on empty input.
double log_likelihood(std::span<const Observation> observations,
                      const MixtureParams& params);

}  // namespace swfdr
