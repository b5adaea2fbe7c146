#include "swfdr/trend.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <tuple>

#include "swfdr/csv.hpp"
#include "swfdr/errors.hpp"

namespace swfdr {

namespace {

constexpr double kLambdaMin = 1e-8;
constexpr double kLambdaMax = 1e8;

struct GlsFit {
  // A = X' V^-1 X (2x2 symmetric), b = X' V^-1 y, q = y' V^-1 y
  double a00 = 0.0, a01 = 0.0, a11 = 0.0;
  double b0 = 0.0, b1 = 0.0;
  double q = 0.0;
  double logdet_v = 0.0;
  double beta0 = 0.0, beta1 = 0.0;
  double rss = 0.0;  // r' V^-1 r
  double det_a = 0.0;
};

// V has compound-symmetry blocks per journal: V_j = I + lambda * J, so
// V_j^-1 = I - (lambda/(1+lambda*n_j)) * J and |V_j| = 1 + lambda*n_j.
GlsFit gls_at_lambda(std::span<const TrendPoint> points, double lambda) {
  std::map<std::string, std::vector<const TrendPoint*>> groups;
  double xbar = 0.0;
  for (const auto& p : points) {
    groups[p.journal].push_back(&p);
    xbar += p.x;
  }
  // Center the predictor for conditioning; det(X'V^-1 X) and the slope
  // are shift-invariant, and the intercept is translated back below.
  xbar /= static_cast<double>(points.size());

  GlsFit g;
  for (const auto& [journal, rows] : groups) {
    const double nj = static_cast<double>(rows.size());
    const double f = lambda / (1.0 + lambda * nj);
    g.logdet_v += std::log1p(lambda * nj);

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const TrendPoint* p : rows) {
      const double cx = p->x - xbar;
      sx += cx;
      sy += p->y;
      sxx += cx * cx;
      sxy += cx * p->y;
      syy += p->y * p->y;
    }
    g.a00 += nj - f * nj * nj;
    g.a01 += sx - f * nj * sx;
    g.a11 += sxx - f * sx * sx;
    g.b0 += sy - f * nj * sy;
    g.b1 += sxy - f * sx * sy;
    g.q += syy - f * sy * sy;
  }

  g.det_a = g.a00 * g.a11 - g.a01 * g.a01;
  const double scale = std::max({std::fabs(g.a00), std::fabs(g.a11), 1e-300});
  if (!(g.det_a > 1e-12 * scale * scale)) {
    throw DataError(
        "fit_mixed_model: singular design (are all predictor values equal?)");
  }
  const double beta0_centered = (g.a11 * g.b0 - g.a01 * g.b1) / g.det_a;
  g.beta1 = (g.a00 * g.b1 - g.a01 * g.b0) / g.det_a;
  g.rss = g.q - (beta0_centered * g.b0 + g.beta1 * g.b1);
  g.beta0 = beta0_centered - g.beta1 * xbar;
  return g;
}

double reml_from_fit(const GlsFit& g, std::size_t n) {
  const double dof = static_cast<double>(n) - 2.0;
  if (!(g.rss > 0.0)) {
    throw NumericalError("fit_mixed_model: non-positive residual sum of squares");
  }
  return -0.5 * (g.logdet_v + std::log(g.det_a) + dof * std::log(g.rss));
}

double normal_two_sided_pvalue(double z) {
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

}  // namespace

double reml_objective(std::span<const TrendPoint> points, double lambda) {
  return reml_from_fit(gls_at_lambda(points, lambda), points.size());
}

TrendFit fit_mixed_model(std::span<const TrendPoint> points) {
  if (points.size() < 3) {
    throw DataError("fit_mixed_model: need at least 3 points");
  }

  auto objective = [&](double log_lambda) {
    return reml_objective(points, std::exp(log_lambda));
  };

  // Coarse scan, then golden-section refinement of the bracketing
  // interval. The scan guards against a non-unimodal profile.
  const double lo = std::log(kLambdaMin);
  const double hi = std::log(kLambdaMax);
  constexpr int kScanPoints = 257;
  int best_idx = 0;
  double best_f = -std::numeric_limits<double>::infinity();
  std::array<double, kScanPoints> ts;
  for (int i = 0; i < kScanPoints; ++i) {
    ts[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * i / double(kScanPoints - 1);
    const double f = objective(ts[static_cast<std::size_t>(i)]);
    if (f > best_f) {
      best_f = f;
      best_idx = i;
    }
  }

  double a = ts[static_cast<std::size_t>(std::max(0, best_idx - 1))];
  double b = ts[static_cast<std::size_t>(
      std::min(kScanPoints - 1, best_idx + 1))];
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  while (b - a > 1e-10) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = objective(d);
    }
  }
  double t_best = 0.5 * (a + b);
  if (objective(lo) > objective(t_best)) t_best = lo;
  if (objective(hi) > objective(t_best)) t_best = hi;

  const double lambda = std::exp(t_best);
  const GlsFit g = gls_at_lambda(points, lambda);
  const std::size_t n = points.size();
  const double sigma2 = g.rss / (static_cast<double>(n) - 2.0);

  std::map<std::string, int> journals;
  for (const auto& p : points) ++journals[p.journal];

  TrendFit fit;
  fit.intercept = g.beta0;
  fit.slope = g.beta1;
  fit.slope_se = std::sqrt(sigma2 * g.a00 / g.det_a);
  fit.slope_pvalue = normal_two_sided_pvalue(fit.slope / fit.slope_se);
  fit.var_resid = sigma2;
  fit.var_random = lambda <= kLambdaMin * 1.0000001 ? 0.0 : lambda * sigma2;
  fit.lambda = lambda;
  fit.reml = reml_from_fit(g, n);
  fit.n_groups = static_cast<int>(journals.size());
  fit.n_points = static_cast<int>(n);
  return fit;
}

std::vector<Stratum> group_strata(
    std::span<const std::tuple<std::string, int, Observation>> rows) {
  std::map<std::pair<std::string, int>, std::vector<Observation>> grouped;
  for (const auto& [journal, year, obs] : rows) {
    grouped[{journal, year}].push_back(obs);
  }
  std::vector<Stratum> strata;
  strata.reserve(grouped.size());
  for (auto& [key, obs] : grouped) {
    strata.push_back({key.first, key.second, std::move(obs)});
  }
  return strata;
}

StratumResult estimate_by_stratum(std::span<const Stratum> strata,
                                  const StratumOptions& options) {
  StratumResult result;
  std::uint64_t idx = 0;
  for (const Stratum& s : strata) {
    const int n = static_cast<int>(s.observations.size());
    if (n < options.min_stratum_size) {
      result.skipped.push_back({s.journal, s.year, n});
      ++idx;
      continue;
    }
    StratumEstimate est;
    est.journal = s.journal;
    est.year = s.year;
    est.n_obs = n;
    if (options.bootstrap_B > 0) {
      const BootstrapResult boot =
          bootstrap_sd(s.observations, options.bootstrap_B,
                       options.seed + 1000003ULL * idx, options.em);
      est.pi0_hat = boot.point;
      est.sd = boot.sd;
    } else {
      est.pi0_hat = run_em(s.observations, options.em).params.pi0;
    }
    result.estimates.push_back(std::move(est));
    ++idx;
  }
  if (result.estimates.empty()) {
    throw DataError("estimate_by_stratum: every stratum is below the minimum "
                    "size of " + std::to_string(options.min_stratum_size));
  }
  return result;
}

SubmissionsTable read_submissions_csv(std::istream& in) {
  SubmissionsTable table;
  std::string line;
  if (!std::getline(in, line)) return table;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 3) {
      throw DataError("submissions CSV line " + std::to_string(lineno) +
                      ": expected journal,year,submissions");
    }
    try {
      table[{fields[0], std::stoi(fields[1])}] = std::stod(fields[2]);
    } catch (const std::exception&) {
      throw DataError("submissions CSV line " + std::to_string(lineno) +
                      ": bad numeric field");
    }
  }
  return table;
}

}  // namespace swfdr
