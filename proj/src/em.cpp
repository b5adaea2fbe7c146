#include "swfdr/em.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include "swfdr/errors.hpp"

namespace swfdr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Weighted sufficient statistics of the alternative component. Exact
// observations collapse to three sums; censored observations group by
// distinct bound; rounded observations group by bin. This makes each
// objective evaluation O(#distinct bounds) instead of O(n).
struct AltStats {
  double w_exact = 0.0;
  double sum_log_p = 0.0;
  double sum_log_1mp = 0.0;
  std::map<double, double> censored_w;         // bound -> total weight
  std::array<double, bins::kCount> rounded_w{};
  double total = 0.0;
  double alpha = kDefaultAlpha;
};

AltStats collect_alt_stats(std::span<const Observation> obs,
                           std::span<const double> weights, double alpha) {
  AltStats s;
  s.alpha = alpha;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double w = 1.0 - weights[i];
    s.total += w;
    switch (obs[i].kind) {
      case ObsKind::Exact:
        s.w_exact += w;
        s.sum_log_p += w * std::log(obs[i].value);
        s.sum_log_1mp += w * std::log1p(-obs[i].value);
        break;
      case ObsKind::Censored:
        s.censored_w[obs[i].value] += w;
        break;
      case ObsKind::Rounded:
        s.rounded_w[static_cast<std::size_t>(obs[i].bin)] += w;
        break;
    }
  }
  return s;
}

// Expected complete-data log-likelihood of the alternative component,
// up to terms constant in (a, b).
double alt_objective(const AltStats& s, const BetaShape& shape) {
  const double i_alpha = beta_cdf(s.alpha, shape);
  if (!(i_alpha > 0.0)) return kNegInf;
  const double log_i_alpha = std::log(i_alpha);
  const double log_b = log_beta(shape.a, shape.b);

  double obj = (shape.a - 1.0) * s.sum_log_p +
               (shape.b - 1.0) * s.sum_log_1mp -
               s.w_exact * (log_b + log_i_alpha);

  for (const auto& [bound, w] : s.censored_w) {
    if (w == 0.0) continue;
    const double lo = censoring::interval_lower(bound);
    const double mass =
        (beta_cdf(bound, shape) - beta_cdf(lo, shape)) / i_alpha;
    if (!(mass > 0.0)) return kNegInf;
    obj += w * std::log(std::min(1.0, mass));
  }

  bool any_rounded = false;
  for (double w : s.rounded_w) {
    if (w > 0.0) any_rounded = true;
  }
  if (any_rounded) {
    const double scale = s.alpha / kDefaultAlpha;
    std::array<double, bins::kCount + 1> cdf_at_edge;
    for (std::size_t k = 0; k <= bins::kCount; ++k) {
      cdf_at_edge[k] = beta_cdf(bins::kEdges[k] * scale, shape);
    }
    for (int k = 0; k < bins::kCount; ++k) {
      const double w = s.rounded_w[static_cast<std::size_t>(k)];
      if (w == 0.0) continue;
      const double mass =
          (cdf_at_edge[static_cast<std::size_t>(k) + 1] -
           cdf_at_edge[static_cast<std::size_t>(k)]) /
          i_alpha;
      if (!(mass > 0.0)) return kNegInf;
      obj += w * std::log(std::min(1.0, mass));
    }
  }
  return obj;
}

// Identifiability floor: the alternative component must keep at least
// this much of its (untruncated) Beta mass below the significance
// threshold. The mixture has a degenerate ridge of shapes whose
// truncated density is nearly uniform on (0, alpha] (for example
// Beta(1, 1+eps), where I_alpha ~= alpha); on that ridge the two
// components coincide and pi0 is unidentifiable, so EM drifts to an
// arbitrary value driven by sampling noise. Genuine alternative spikes
// such as Beta(0.5, 25) have I_alpha near 0.9 and are unaffected.
constexpr double kMinAltMass = 0.55;

// Nelder-Mead over x = (log a, log b), maximizing alt_objective subject
// to the identifiability floor. Shapes are clamped to [1e-4, 1e4]; the
// best admissible shape seen (including the warm start) is returned, so
// an M-step can never lower the objective (generalized EM).
BetaShape maximize_shape(const AltStats& stats, const BetaShape& start,
                         double rel_tol) {
  constexpr int kMaxEvals = 500;
  int evals = 0;

  BetaShape best_shape = start;
  double best_f = alt_objective(stats, start);

  auto eval = [&](const std::array<double, 2>& x) {
    ++evals;
    const BetaShape shape = clamp_shape(std::exp(x[0]), std::exp(x[1]));
    if (beta_cdf(stats.alpha, shape) < kMinAltMass) return kNegInf;
    const double f = alt_objective(stats, shape);
    if (f > best_f) {
      best_f = f;
      best_shape = shape;
    }
    return f;
  };

  struct Vertex {
    std::array<double, 2> x;
    double f;
  };

  std::array<Vertex, 3> simplex;
  const std::array<double, 2> x0 = {std::log(start.a), std::log(start.b)};
  constexpr double kStep = 0.3;
  simplex[0] = {x0, eval(x0)};
  simplex[1] = {{x0[0] + kStep, x0[1]}, 0.0};
  simplex[1].f = eval(simplex[1].x);
  simplex[2] = {{x0[0], x0[1] + kStep}, 0.0};
  simplex[2].f = eval(simplex[2].x);

  auto order = [&] {
    std::sort(simplex.begin(), simplex.end(),
              [](const Vertex& u, const Vertex& v) { return u.f > v.f; });
  };
  order();

  while (evals < kMaxEvals) {
    // Spread on the log-likelihood scale; an absolute criterion keeps
    // the inner solve aligned with the outer loglik_tol stopping rule
    // (a tolerance scaled by |f| would stall the EM far from the
    // optimum whenever the log-likelihood is large in magnitude).
    const double spread = simplex[0].f - simplex[2].f;
    if (spread <= rel_tol) break;

    const std::array<double, 2> centroid = {
        0.5 * (simplex[0].x[0] + simplex[1].x[0]),
        0.5 * (simplex[0].x[1] + simplex[1].x[1])};
    auto point = [&](double coef) {
      return std::array<double, 2>{
          centroid[0] + coef * (centroid[0] - simplex[2].x[0]),
          centroid[1] + coef * (centroid[1] - simplex[2].x[1])};
    };

    const auto xr = point(1.0);
    const double fr = eval(xr);
    if (fr > simplex[0].f) {
      const auto xe = point(2.0);
      const double fe = eval(xe);
      simplex[2] = fe > fr ? Vertex{xe, fe} : Vertex{xr, fr};
    } else if (fr > simplex[1].f) {
      simplex[2] = {xr, fr};
    } else {
      const auto xc = point(fr > simplex[2].f ? 0.5 : -0.5);
      const double fc = eval(xc);
      if (fc > std::max(fr, simplex[2].f)) {
        simplex[2] = {xc, fc};
      } else {
        // shrink toward the best vertex
        for (int i = 1; i < 3; ++i) {
          for (int d = 0; d < 2; ++d) {
            simplex[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(
                d)] = 0.5 * (simplex[0].x[static_cast<std::size_t>(d)] +
                             simplex[static_cast<std::size_t>(i)]
                                 .x[static_cast<std::size_t>(d)]);
          }
          simplex[static_cast<std::size_t>(i)].f =
              eval(simplex[static_cast<std::size_t>(i)].x);
        }
      }
    }
    order();
  }

  return best_shape;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::vector<double> e_step(std::span<const Observation> observations,
                           const MixtureParams& params) {
  std::vector<double> weights;
  weights.reserve(observations.size());

  const double pi0 = params.pi0;
  const double alpha = params.alpha;
  std::map<double, double> cdf_memo;
  std::array<double, bins::kCount> bin_memo;
  bin_memo.fill(-1.0);

  for (const Observation& obs : observations) {
    double w = 0.0;
    if (pi0 == 0.0) {
      w = 0.0;
    } else if (pi0 == 1.0) {
      w = 1.0;
    } else {
      switch (obs.kind) {
        case ObsKind::Exact:
          w = (pi0 / alpha) / mixture_pdf(obs.value, params);
          break;
        case ObsKind::Censored: {
          auto [it, inserted] = cdf_memo.try_emplace(obs.value, 0.0);
          if (inserted) it->second = censored_mass(obs.value, params);
          const double lo = censoring::interval_lower(obs.value);
          w = (pi0 * (obs.value - lo) / alpha) / it->second;
          break;
        }
        case ObsKind::Rounded: {
          auto& mass = bin_memo[static_cast<std::size_t>(obs.bin)];
          if (mass < 0.0) mass = bin_probability(obs.bin, params);
          const double scale = alpha / kDefaultAlpha;
          w = (pi0 * bins::width(obs.bin) * scale / alpha) / mass;
          break;
        }
      }
    }
    weights.push_back(std::clamp(w, 0.0, 1.0));
  }
  return weights;
}

MixtureParams m_step(std::span<const Observation> observations,
                     std::span<const double> weights,
                     const MixtureParams& current, double m_step_tol,
                     bool estimate_shape) {
  if (observations.size() != weights.size()) {
    throw std::invalid_argument("m_step: weights/observations size mismatch");
  }
  if (observations.empty()) {
    throw std::invalid_argument("m_step: empty observation list");
  }

  double sum_w = 0.0;
  for (double w : weights) sum_w += w;
  const double pi0 = std::clamp(sum_w / static_cast<double>(weights.size()),
                                0.0, 1.0);
  if (!estimate_shape) {
    return MixtureParams(pi0, current.shape, current.alpha);
  }

  const AltStats stats =
      collect_alt_stats(observations, weights, current.alpha);
  if (stats.total < 1e-10) {
    // all-null fit; the shape is unconstrained, keep it
    return MixtureParams(pi0, current.shape, current.alpha);
  }

  BetaShape candidate = maximize_shape(stats, current.shape, m_step_tol);
  // GEM safeguard: never accept a shape that lowers the objective.
  if (alt_objective(stats, candidate) < alt_objective(stats, current.shape)) {
    candidate = current.shape;
  }
  return MixtureParams(pi0, candidate, current.alpha);
}

EMResult run_em(std::span<const Observation> observations,
                const EMConfig& config) {
  if (static_cast<int>(observations.size()) < config.min_observations) {
    throw DataError("run_em: need at least " +
                    std::to_string(config.min_observations) +
                    " observations, got " +
                    std::to_string(observations.size()));
  }

  const bool all_threshold_censored = std::all_of(
      observations.begin(), observations.end(), [&](const Observation& o) {
        return o.kind == ObsKind::Censored && o.value >= config.init.alpha;
      });
  if (all_threshold_censored) {
    throw DataError(
        "run_em: every observation is censored at the significance "
        "threshold; the data carry no information about pi0");
  }

  EMResult result{config.init, {}, 0, false, false};
  MixtureParams params = config.init;
  double prev_ll = kNegInf;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    const MixtureParams prev_params = params;
    const std::vector<double> weights = e_step(observations, params);
    params = m_step(observations, weights, params, config.m_step_tol,
                    config.estimate_shape);
    const double ll = log_likelihood(observations, params);
    if (!std::isfinite(ll)) {
      result.params = params;
      result.iterations = iter + 1;
      throw NumericalError(
          "run_em: non-finite log-likelihood at iteration " +
          std::to_string(iter + 1) + " (trace length " +
          std::to_string(result.loglik_trace.size()) + ")");
    }
    if (iter > 0 && ll < prev_ll) {
      // EM guarantees a nondecreasing likelihood; a decrease means the
      // update is below the numerical resolution of the evaluation.
      // Keep the previous iterate and stop.
      params = prev_params;
      result.converged = true;
      break;
    }
    result.loglik_trace.push_back(ll);
    result.iterations = iter + 1;
    if (iter > 0 && std::fabs(ll - prev_ll) < config.loglik_tol) {
      result.converged = true;
      prev_ll = ll;
      break;
    }
    prev_ll = ll;
  }

  result.params = params;
  result.shape_near_uniform = std::fabs(params.shape.a - 1.0) < 0.05 &&
                              std::fabs(params.shape.b - 1.0) < 0.05;
  return result;
}

BootstrapResult bootstrap_sd(std::span<const Observation> observations, int B,
                             std::uint64_t seed, const EMConfig& config,
                             int threads) {
  if (B < 2) throw std::invalid_argument("bootstrap_sd: B must be >= 2");

  const EMResult full = run_em(observations, config);

  EMConfig warm = config;
  warm.init = full.params;
  warm.max_iters = std::min(config.max_iters, config.resample_max_iters);

  const std::size_t n = observations.size();
  std::vector<double> estimates(static_cast<std::size_t>(B),
                                std::numeric_limits<double>::quiet_NaN());

  auto run_one = [&](int b) {
    std::mt19937_64 rng(splitmix64(seed ^ (0x9e3779b97f4a7c15ULL *
                                           (static_cast<std::uint64_t>(b) +
                                            1))));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<Observation> resample;
    resample.reserve(n);
    for (std::size_t i = 0; i < n; ++i) resample.push_back(observations[pick(rng)]);
    try {
      estimates[static_cast<std::size_t>(b)] =
          run_em(resample, warm).params.pi0;
    } catch (const std::exception&) {
      // leave NaN; counted as a skipped resample
    }
  };

  const int nthreads = std::max(1, std::min(threads, B));
  if (nthreads == 1) {
    for (int b = 0; b < B; ++b) run_one(b);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) {
      pool.emplace_back([&, t] {
        for (int b = t; b < B; b += nthreads) run_one(b);
      });
    }
    for (auto& th : pool) th.join();
  }

  BootstrapResult result;
  result.point = full.params.pi0;
  result.B = B;
  result.seed = seed;
  for (double e : estimates) {
    if (std::isnan(e)) {
      ++result.skipped;
    } else {
      result.resample_estimates.push_back(e);
    }
  }
  if (result.skipped * 10 > B) {
    throw DataError("bootstrap_sd: more than 10% of resamples failed (" +
                    std::to_string(result.skipped) + "/" + std::to_string(B) +
                    ")");
  }

  const std::size_t m = result.resample_estimates.size();
  double mean = 0.0;
  for (double e : result.resample_estimates) mean += e;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double e : result.resample_estimates) ss += (e - mean) * (e - mean);
  result.sd = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1)) : 0.0;
  return result;
}

}  // namespace swfdr
