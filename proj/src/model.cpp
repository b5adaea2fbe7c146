#include "swfdr/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "swfdr/errors.hpp"

namespace swfdr {

namespace bins {

namespace {
void check_bin(int bin) {
  if (bin < 0 || bin >= kCount) {
    throw std::domain_error("rounding bin index out of range: " +
                            std::to_string(bin));
  }
}
}  // namespace

double lower(int bin) {
  check_bin(bin);
  return kEdges[static_cast<std::size_t>(bin)];
}

double upper(int bin) {
  check_bin(bin);
  return kEdges[static_cast<std::size_t>(bin) + 1];
}

double width(int bin) { return upper(bin) - lower(bin); }

int bin_for(double p) {
  if (!(p >= 0.0) || !(p <= kEdges.back())) {
    throw std::domain_error("bin_for: p outside [0, 0.05]");
  }
  for (int k = 0; k < kCount - 1; ++k) {
    if (p < upper(k)) return k;
  }
  return kCount - 1;
}

double round_value(int bin) {
  check_bin(bin);
  return 0.01 * bin;
}

}  // namespace bins

Observation Observation::exact(double p, double alpha) {
  if (!(p > 0.0) || !(p <= alpha)) {
    throw std::domain_error("Observation::exact: p must lie in (0, alpha]");
  }
  Observation o;
  o.kind = ObsKind::Exact;
  o.value = p;
  return o;
}

Observation Observation::censored(double bound, bool strict, double alpha) {
  if (!(bound > 0.0) || !(bound <= alpha)) {
    throw std::domain_error(
        "Observation::censored: bound must lie in (0, alpha]");
  }
  Observation o;
  o.kind = ObsKind::Censored;
  o.value = bound;
  o.strict = strict;
  return o;
}

Observation Observation::rounded(int bin) {
  bins::check_bin(bin);
  Observation o;
  o.kind = ObsKind::Rounded;
  o.bin = bin;
  return o;
}

MixtureParams::MixtureParams(double pi0_, BetaShape shape_, double alpha_)
    : pi0(pi0_), shape(shape_), alpha(alpha_) {
  if (!(pi0 >= 0.0) || !(pi0 <= 1.0) || !std::isfinite(pi0)) {
    throw std::invalid_argument("MixtureParams: pi0 must lie in [0,1]");
  }
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("MixtureParams: alpha must lie in (0,1)");
  }
}

double mixture_pdf(double p, const MixtureParams& params) {
  if (!(p > 0.0) || !(p <= params.alpha)) {
    throw std::domain_error("mixture_pdf: p must lie in (0, alpha]");
  }
  const double null_part = params.pi0 / params.alpha;
  if (params.pi0 == 1.0) return null_part;
  const double alt =
      std::exp(trunc_beta_log_pdf(p, params.shape, params.alpha));
  return null_part + (1.0 - params.pi0) * alt;
}

double mixture_cdf(double c, const MixtureParams& params) {
  if (!(c >= 0.0) || !(c <= params.alpha)) {
    throw std::domain_error("mixture_cdf: c must lie in [0, alpha]");
  }
  if (c == params.alpha) return 1.0;
  const double null_part = params.pi0 * c / params.alpha;
  if (params.pi0 == 1.0) return null_part;
  return null_part +
         (1.0 - params.pi0) * trunc_beta_cdf(c, params.shape, params.alpha);
}

double bin_probability(int bin, const MixtureParams& params) {
  const double lo = bins::lower(bin);
  const double hi = bins::upper(bin);
  // Scale bin edges if alpha differs from the default partition range.
  const double scale = params.alpha / kDefaultAlpha;
  return mixture_cdf(hi * scale, params) - mixture_cdf(lo * scale, params);
}

namespace censoring {

double interval_lower(double bound) {
  double lo = 0.0;
  for (double t : kThresholds) {
    if (t < bound) lo = t;
  }
  return lo;
}

}  // namespace censoring

double censored_mass(double bound, const MixtureParams& params) {
  const double lo = censoring::interval_lower(bound);
  return mixture_cdf(bound, params) - mixture_cdf(lo, params);
}

double log_likelihood(std::span<const Observation> observations,
                      const MixtureParams& params) {
  if (observations.empty()) {
    throw std::invalid_argument("log_likelihood: empty observation list");
  }
  double total = 0.0;
  for (const Observation& obs : observations) {
    switch (obs.kind) {
      case ObsKind::Exact:
        total += std::log(mixture_pdf(obs.value, params));
        break;
      case ObsKind::Censored:
        total += std::log(censored_mass(obs.value, params));
        break;
      case ObsKind::Rounded:
        total += std::log(bin_probability(obs.bin, params));
        break;
    }
  }
  return total;
}

}  // namespace swfdr
