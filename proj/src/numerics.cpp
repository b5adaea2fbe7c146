#include "swfdr/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace swfdr {

namespace {

// Continued fraction for I_x(a,b), modified Lentz. Converges for
// x < (a+1)/(a+b+2); callers apply the symmetry switch.
double beta_cont_frac(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-14;
  constexpr int kMaxTerms = 300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;

  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;

  for (int m = 1; m <= kMaxTerms; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;

    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

BetaShape::BetaShape(double a_, double b_) : a(a_), b(b_) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::invalid_argument("BetaShape: shapes must be positive and finite");
  }
}

BetaShape clamp_shape(double a, double b) {
  return BetaShape(std::clamp(a, kShapeMin, kShapeMax),
                   std::clamp(b, kShapeMin, kShapeMax));
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double beta_log_pdf(double p, const BetaShape& shape) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::domain_error("beta_log_pdf: p must lie in (0,1)");
  }
  return (shape.a - 1.0) * std::log(p) + (shape.b - 1.0) * std::log1p(-p) -
         log_beta(shape.a, shape.b);
}

double beta_cdf(double p, const BetaShape& shape) {
  if (!(p >= 0.0) || !(p <= 1.0)) {
    throw std::domain_error("beta_cdf: p must lie in [0,1]");
  }
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;

  const double a = shape.a;
  const double b = shape.b;
  const double log_front =
      a * std::log(p) + b * std::log1p(-p) - log_beta(a, b);

  double result;
  if (p < (a + 1.0) / (a + b + 2.0)) {
    result = std::exp(log_front) * beta_cont_frac(a, b, p) / a;
  } else {
    result = 1.0 - std::exp(log_front) * beta_cont_frac(b, a, 1.0 - p) / b;
  }
  return std::clamp(result, 0.0, 1.0);
}

double trunc_beta_log_pdf(double p, const BetaShape& shape, double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::domain_error("trunc_beta_log_pdf: alpha must lie in (0,1)");
  }
  if (!(p > 0.0) || !(p <= alpha)) {
    throw std::domain_error("trunc_beta_log_pdf: p must lie in (0,alpha]");
  }
  return beta_log_pdf(p, shape) - std::log(beta_cdf(alpha, shape));
}

double trunc_beta_cdf(double c, const BetaShape& shape, double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::domain_error("trunc_beta_cdf: alpha must lie in (0,1)");
  }
  if (!(c >= 0.0) || !(c <= alpha)) {
    throw std::domain_error("trunc_beta_cdf: c must lie in [0,alpha]");
  }
  if (c == 0.0) return 0.0;
  if (c == alpha) return 1.0;
  return std::min(1.0, beta_cdf(c, shape) / beta_cdf(alpha, shape));
}

double trunc_uniform_pdf(double p, double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::domain_error("trunc_uniform_pdf: alpha must lie in (0,1)");
  }
  if (!(p > 0.0) || !(p <= alpha)) {
    throw std::domain_error("trunc_uniform_pdf: p must lie in (0,alpha]");
  }
  return 1.0 / alpha;
}

double trunc_uniform_cdf(double p, double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::domain_error("trunc_uniform_cdf: alpha must lie in (0,1)");
  }
  if (!(p >= 0.0) || !(p <= alpha)) {
    throw std::domain_error("trunc_uniform_cdf: p must lie in [0,alpha]");
  }
  return p / alpha;
}

}  // namespace swfdr
