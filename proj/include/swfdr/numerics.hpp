#pragma once

#include <stdexcept>

namespace swfdr {

/// Shape parameters (a, b) of a Beta distribution. Both must be positive
/// and finite; construction throws std::invalid_argument otherwise.
struct BetaShape {
  double a;
  double b;

  BetaShape(double a_, double b_);
};

/// Shape clamp applied in optimizer-facing paths. Beyond this range the
/// truncated-Beta family at alpha = 0.05 is numerically degenerate.
inline constexpr double kShapeMin = 1e-4;
inline constexpr double kShapeMax = 1e4;

BetaShape clamp_shape(double a, double b);

/// log B(a, b)
double log_beta(double a, double b);

/// Log density of Beta(a, b) at p in (0, 1).
double beta_log_pdf(double p, const BetaShape& shape);

/// Regularized incomplete Beta function I_p(a, b), i.e. the Beta CDF.
/// Continued-fraction evaluation with the symmetry switch at
/// p > (a+1)/(a+b+2).
double beta_cdf(double p, const BetaShape& shape);

/// Log density of Beta(a, b) truncated to (0, alpha], at p.
double trunc_beta_log_pdf(double p, const BetaShape& shape, double alpha);

/// CDF of the truncated Beta on (0, alpha]: beta_cdf(c)/beta_cdf(alpha).
double trunc_beta_cdf(double c, const BetaShape& shape, double alpha);

/// Density of the uniform distribution on (0, alpha]: 1/alpha.
double trunc_uniform_pdf(double p, double alpha);

/// CDF of the uniform distribution on (0, alpha]: p/alpha.
double trunc_uniform_cdf(double p, double alpha);

}  // namespace swfdr
