#include "swfdr/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace swfdr {

namespace {

const double kCensorBounds[] = {0.001, 0.01, 0.05};

// Inverse-CDF sampling by bisection, used when rejection would accept
// fewer than 1% of draws.
double trunc_beta_inverse_cdf(double u, const BetaShape& shape, double alpha,
                              double mass_at_alpha) {
  const double target = u * mass_at_alpha;
  double lo = 0.0, hi = alpha;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (beta_cdf(mid, shape) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::max(0.5 * (lo + hi), 1e-300);
}

double draw_trunc_beta(std::mt19937_64& rng, const BetaShape& shape,
                       double alpha, double mass_at_alpha) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (mass_at_alpha < 0.01) {
    double u = unif(rng);
    while (u == 0.0) u = unif(rng);
    return trunc_beta_inverse_cdf(u, shape, alpha, mass_at_alpha);
  }
  std::gamma_distribution<double> ga(shape.a, 1.0);
  std::gamma_distribution<double> gb(shape.b, 1.0);
  for (;;) {
    const double x = ga(rng);
    const double y = gb(rng);
    const double p = x / (x + y);
    if (p > 0.0 && p <= alpha) return p;
  }
}

}  // namespace

std::vector<SimulatedDatum> simulate_observations(const SimConfig& config) {
  if (config.n < 1) {
    throw std::invalid_argument("simulate_observations: n must be >= 1");
  }
  if (config.censor_frac < 0.0 || config.round_frac < 0.0 ||
      config.censor_frac + config.round_frac > 1.0) {
    throw std::invalid_argument(
        "simulate_observations: censor_frac + round_frac must lie in [0,1]");
  }

  const MixtureParams& params = config.true_params;
  const double alpha = params.alpha;
  const double mass_at_alpha = beta_cdf(alpha, params.shape);

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<SimulatedDatum> data;
  data.reserve(static_cast<std::size_t>(config.n));

  for (int i = 0; i < config.n; ++i) {
    SimulatedDatum d;
    d.from_null = unif(rng) < params.pi0;
    if (d.from_null) {
      double u = unif(rng);
      while (u == 0.0) u = unif(rng);
      d.hidden_p = alpha * u;
    } else {
      d.hidden_p = draw_trunc_beta(rng, params.shape, alpha, mass_at_alpha);
    }

    const double style = unif(rng);
    if (style < config.round_frac) {
      d.obs = Observation::rounded(bins::bin_for(d.hidden_p));
    } else if (style < config.round_frac + config.censor_frac) {
      double bound = alpha;
      for (double c : kCensorBounds) {
        if (c >= d.hidden_p) {
          bound = c;
          break;
        }
      }
      d.obs = Observation::censored(bound, true, alpha);
    } else {
      d.obs = Observation::exact(d.hidden_p, alpha);
    }
    data.push_back(d);
  }
  return data;
}

double theoretical_swfdr(const TheoreticalInputs& inputs) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(inputs.prior_true) || !in_unit(inputs.alpha_level) ||
      !in_unit(inputs.power)) {
    throw std::domain_error("theoretical_swfdr: inputs must lie in [0,1]");
  }
  const double false_sig = (1.0 - inputs.prior_true) * inputs.alpha_level;
  const double true_sig = inputs.prior_true * inputs.power;
  const double denom = false_sig + true_sig;
  if (!(denom > 0.0)) {
    throw std::domain_error(
        "theoretical_swfdr: no hypothesis is ever called significant");
  }
  return false_sig / denom;
}

std::vector<PValueRecord> to_records(std::span<const SimulatedDatum> data,
                                     const std::string& journal, int year) {
  std::vector<PValueRecord> records;
  records.reserve(data.size());
  char buf[48];
  int i = 0;
  for (const auto& d : data) {
    PValueRecord r;
    r.doc_id = "sim-" + std::to_string(i++);
    r.journal = journal;
    r.year = year;
    switch (d.obs.kind) {
      case ObsKind::Exact:
        r.comparison = Comparison::Equals;
        r.value = d.obs.value;
        std::snprintf(buf, sizeof(buf), "P=%.17g", d.obs.value);
        break;
      case ObsKind::Censored:
        r.comparison = Comparison::Less;
        r.value = d.obs.value;
        std::snprintf(buf, sizeof(buf), "P<%g", d.obs.value);
        break;
      case ObsKind::Rounded:
        r.comparison = Comparison::Equals;
        r.value = bins::round_value(d.obs.bin);
        std::snprintf(buf, sizeof(buf), "P=%.2f", r.value);
        break;
    }
    r.raw_span = buf;
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace swfdr
