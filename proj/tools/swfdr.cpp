// Command-line front end: extract -> estimate -> trend, plus the
// simulate and ppv utilities. Every subcommand writes a run manifest
// next to its primary output.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "swfdr/csv.hpp"
#include "swfdr/em.hpp"
#include "swfdr/errors.hpp"
#include "swfdr/parser.hpp"
#include "swfdr/simulate.hpp"
#include "swfdr/trend.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using swfdr::DataError;

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr int kSchemaVersion = 1;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

// Outputs are staged in memory and flushed together so a failing command
// leaves no partial files behind.
class OutputSet {
 public:
  void stage(const std::string& path, std::string content) {
    staged_.emplace_back(path, std::move(content));
  }

  void manifest(const std::string& subcommand,
                const std::vector<std::string>& inputs,
                std::uint64_t seed, const json& overrides,
                const std::string& primary_out) {
    json m;
    m["schema_version"] = kSchemaVersion;
    m["tool_version"] = kToolVersion;
    m["subcommand"] = subcommand;
    m["inputs"] = inputs;
    json outs = json::array();
    for (const auto& [path, _] : staged_) outs.push_back(path);
    m["outputs"] = outs;
    m["seed"] = seed;
    m["config_overrides"] = overrides;
    m["timestamp"] = now_iso8601();
    stage(primary_out + ".manifest.json", m.dump(2) + "\n");
  }

  void flush() {
    std::vector<std::string> written;
    try {
      for (const auto& [path, content] : staged_) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot open output file: " + path);
        out << content;
        if (!out) throw DataError("failed writing output file: " + path);
        written.push_back(path);
      }
    } catch (...) {
      for (const auto& path : written) {
        std::error_code ec;
        fs::remove(path, ec);
      }
      throw;
    }
  }

 private:
  static std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
  }

  std::vector<std::pair<std::string, std::string>> staged_;
};

std::string read_file_or_throw(const std::string& path, std::ifstream& in) {
  in.open(path);
  if (!in) throw DataError("cannot open input file: " + path);
  return path;
}

std::vector<swfdr::PValueRecord> load_records(const std::string& path) {
  std::ifstream in;
  read_file_or_throw(path, in);
  return swfdr::read_records_csv(in);
}

struct ClassifiedCorpus {
  std::vector<swfdr::PValueRecord> records;
  std::vector<swfdr::Observation> observations;
  // parallel to observations
  std::vector<std::pair<std::string, int>> strata_keys;
  int excluded_above = 0;
  int excluded_nonpositive = 0;
  int n_exact = 0, n_censored = 0, n_rounded = 0;
};

ClassifiedCorpus classify_records(std::vector<swfdr::PValueRecord> records,
                                  double alpha) {
  ClassifiedCorpus c;
  c.records = std::move(records);
  for (const auto& rec : c.records) {
    const auto cls = swfdr::classify(rec, alpha);
    if (cls.excluded()) {
      if (*cls.exclude == swfdr::ExcludeReason::AboveThreshold) {
        ++c.excluded_above;
      } else {
        ++c.excluded_nonpositive;
      }
      continue;
    }
    switch (cls.obs->kind) {
      case swfdr::ObsKind::Exact: ++c.n_exact; break;
      case swfdr::ObsKind::Censored: ++c.n_censored; break;
      case swfdr::ObsKind::Rounded: ++c.n_rounded; break;
    }
    c.observations.push_back(*cls.obs);
    c.strata_keys.emplace_back(rec.journal, rec.year);
  }
  return c;
}

json diagnostics_to_json(const swfdr::CorpusDiagnostics& d) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["n_docs"] = d.n_docs;
  j["n_malformed_docs"] = d.n_malformed_docs;
  j["n_docs_with_pvalue"] = d.n_docs_with_pvalue;
  j["n_records"] = d.n_records;
  j["n_unparseable_numerals"] = d.n_unparseable_numerals;
  j["n_excluded_above_threshold"] = d.n_excluded_above_threshold;
  j["n_excluded_nonpositive"] = d.n_excluded_nonpositive;
  j["n_exact"] = d.n_exact;
  j["n_censored"] = d.n_censored;
  j["n_rounded"] = d.n_rounded;
  j["median_records_per_reporting_doc"] = d.median_records_per_reporting_doc;
  j["records_per_journal"] = d.records_per_journal;
  json per_year = json::object();
  for (const auto& [year, count] : d.records_per_year) {
    per_year[std::to_string(year)] = count;
  }
  j["records_per_year"] = per_year;
  j["frac_significant_per_journal"] = d.frac_significant_per_journal;
  return j;
}

int cmd_extract(const std::string& in_path, const std::string& out_path,
                std::string diag_path, std::uint64_t seed) {
  if (diag_path.empty()) diag_path = out_path + ".diagnostics.json";

  std::ifstream in;
  read_file_or_throw(in_path, in);
  const swfdr::CorpusResult corpus = swfdr::ingest_corpus(in);

  std::vector<swfdr::PValueRecord> records;
  records.reserve(corpus.entries.size());
  for (const auto& e : corpus.entries) records.push_back(e.record);

  std::ostringstream csv;
  swfdr::write_records_csv(csv, records);

  OutputSet out;
  out.stage(out_path, csv.str());
  out.stage(diag_path, diagnostics_to_json(corpus.diagnostics).dump(2) + "\n");
  out.manifest("extract", {in_path}, seed, json::object(), out_path);
  out.flush();
  return kExitOk;
}

json stratum_table_json(const swfdr::StratumResult& res) {
  json strata = json::array();
  for (const auto& e : res.estimates) {
    strata.push_back({{"journal", e.journal},
                      {"year", e.year},
                      {"pi0", e.pi0_hat},
                      {"sd", e.sd},
                      {"n_obs", e.n_obs}});
  }
  json skipped = json::array();
  for (const auto& s : res.skipped) {
    skipped.push_back(
        {{"journal", s.journal}, {"year", s.year}, {"n_obs", s.n_obs}});
  }
  return json{{"estimates", strata}, {"skipped", skipped}};
}

std::vector<swfdr::Stratum> make_strata(const ClassifiedCorpus& corpus,
                                        bool by_journal, bool by_year) {
  std::vector<std::tuple<std::string, int, swfdr::Observation>> rows;
  rows.reserve(corpus.observations.size());
  for (std::size_t i = 0; i < corpus.observations.size(); ++i) {
    rows.emplace_back(by_journal ? corpus.strata_keys[i].first : "",
                      by_year ? corpus.strata_keys[i].second : 0,
                      corpus.observations[i]);
  }
  return swfdr::group_strata(rows);
}

int cmd_estimate(const std::string& in_path, const std::string& out_path,
                 int bootstrap_B, std::uint64_t seed, const std::string& by,
                 const std::string& strata_out, const std::string& hist_out,
                 int threads, int min_stratum, double alpha) {
  const ClassifiedCorpus corpus = classify_records(load_records(in_path), alpha);

  swfdr::EMConfig config;
  const swfdr::EMResult fit = swfdr::run_em(corpus.observations, config);

  json result;
  result["schema_version"] = kSchemaVersion;
  result["pi0"] = fit.params.pi0;
  if (bootstrap_B > 0) {
    const swfdr::BootstrapResult boot = swfdr::bootstrap_sd(
        corpus.observations, bootstrap_B, seed, config, threads);
    result["sd"] = boot.sd;
    result["bootstrap"] = {{"B", boot.B},
                           {"seed", boot.seed},
                           {"skipped", boot.skipped},
                           {"estimates", boot.resample_estimates}};
  }
  result["em"] = {{"a", fit.params.shape.a},
                  {"b", fit.params.shape.b},
                  {"alpha", fit.params.alpha},
                  {"iterations", fit.iterations},
                  {"converged", fit.converged},
                  {"loglik", fit.loglik_trace.back()},
                  {"shape_near_uniform", fit.shape_near_uniform}};
  result["counts"] = {{"n_obs", corpus.observations.size()},
                      {"exact", corpus.n_exact},
                      {"censored", corpus.n_censored},
                      {"rounded", corpus.n_rounded},
                      {"excluded_above_threshold", corpus.excluded_above},
                      {"excluded_nonpositive", corpus.excluded_nonpositive}};

  OutputSet out;

  if (!by.empty()) {
    const bool by_journal = by.find("journal") != std::string::npos;
    const bool by_year = by.find("year") != std::string::npos;
    if (!by_journal && !by_year) {
      throw DataError("--by must name journal, year, or journal,year");
    }
    swfdr::StratumOptions opts;
    opts.min_stratum_size = min_stratum;
    opts.bootstrap_B = bootstrap_B;
    opts.seed = seed;
    opts.em = config;
    const swfdr::StratumResult strata =
        swfdr::estimate_by_stratum(make_strata(corpus, by_journal, by_year),
                                   opts);
    result["strata"] = stratum_table_json(strata);
    if (!strata_out.empty()) {
      std::ostringstream csv;
      csv << "journal,year,pi0,sd,n_obs\n";
      char buf[64];
      for (const auto& e : strata.estimates) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g", e.pi0_hat, e.sd);
        csv << swfdr::csv::escape(e.journal) << ',' << e.year << ',' << buf
            << ',' << e.n_obs << '\n';
      }
      out.stage(strata_out, csv.str());
    }
  }

  if (!hist_out.empty()) {
    // Figure-3-style plot data: reported values in (0, alpha], bin width
    // 0.0025.
    constexpr double kWidth = 0.0025;
    const int nbins = static_cast<int>(std::lround(alpha / kWidth));
    std::vector<int> counts(static_cast<std::size_t>(nbins), 0);
    for (const auto& rec : corpus.records) {
      if (rec.value <= 0.0 || rec.value > alpha) continue;
      int k = static_cast<int>(rec.value / kWidth);
      if (k >= nbins) k = nbins - 1;
      ++counts[static_cast<std::size_t>(k)];
    }
    std::ostringstream csv;
    csv << "bin_lo,bin_hi,count\n";
    char buf[64];
    for (int k = 0; k < nbins; ++k) {
      std::snprintf(buf, sizeof(buf), "%g,%g,%d", k * kWidth, (k + 1) * kWidth,
                    counts[static_cast<std::size_t>(k)]);
      csv << buf << '\n';
    }
    out.stage(hist_out, csv.str());
  }

  out.stage(out_path, result.dump(2) + "\n");
  json overrides;
  if (bootstrap_B > 0) overrides["bootstrap"] = bootstrap_B;
  if (!by.empty()) overrides["by"] = by;
  if (threads != 1) overrides["threads"] = threads;
  out.manifest("estimate", {in_path}, seed, overrides, out_path);
  out.flush();
  return kExitOk;
}

int cmd_simulate(int n, double pi0, double a, double b, double censor_frac,
                 double round_frac, std::uint64_t seed,
                 const std::string& out_path) {
  swfdr::SimConfig config;
  config.n = n;
  config.true_params = swfdr::MixtureParams(pi0, swfdr::BetaShape(a, b));
  config.censor_frac = censor_frac;
  config.round_frac = round_frac;
  config.seed = seed;

  const auto data = swfdr::simulate_observations(config);
  const auto records = swfdr::to_records(data);

  std::ostringstream csv;
  swfdr::write_records_csv(csv, records);

  OutputSet out;
  out.stage(out_path, csv.str());
  json overrides{{"n", n},         {"pi0", pi0},
                 {"a", a},         {"b", b},
                 {"censor_frac", censor_frac}, {"round_frac", round_frac}};
  out.manifest("simulate", {}, seed, overrides, out_path);
  out.flush();
  return kExitOk;
}

std::vector<swfdr::StratumEstimate> load_estimates_csv(
    const std::string& path) {
  std::ifstream in;
  read_file_or_throw(path, in);
  std::vector<swfdr::StratumEstimate> estimates;
  std::string line;
  if (!std::getline(in, line)) return estimates;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = swfdr::csv::split(line);
    if (fields.size() != 5) {
      throw DataError("estimates CSV line " + std::to_string(lineno) +
                      ": expected journal,year,pi0,sd,n_obs");
    }
    swfdr::StratumEstimate e;
    e.journal = fields[0];
    try {
      e.year = std::stoi(fields[1]);
      e.pi0_hat = std::stod(fields[2]);
      e.sd = std::stod(fields[3]);
      e.n_obs = std::stoi(fields[4]);
    } catch (const std::exception&) {
      throw DataError("estimates CSV line " + std::to_string(lineno) +
                      ": bad numeric field");
    }
    estimates.push_back(std::move(e));
  }
  return estimates;
}

int cmd_trend(const std::string& records_path, const std::string& estimates_path,
              const std::string& predictor, const std::string& submissions_path,
              const std::string& out_path, const std::string& plot_path,
              int min_stratum, int stratum_bootstrap, std::uint64_t seed) {
  if (predictor != "year" && predictor != "submissions") {
    throw DataError("--predictor must be year or submissions");
  }

  std::vector<swfdr::StratumEstimate> estimates;
  std::vector<std::string> inputs;
  if (!estimates_path.empty()) {
    estimates = load_estimates_csv(estimates_path);
    inputs.push_back(estimates_path);
  } else if (!records_path.empty()) {
    const ClassifiedCorpus corpus =
        classify_records(load_records(records_path), swfdr::kDefaultAlpha);
    swfdr::StratumOptions opts;
    opts.min_stratum_size = min_stratum;
    opts.bootstrap_B = stratum_bootstrap;
    opts.seed = seed;
    estimates = swfdr::estimate_by_stratum(make_strata(corpus, true, true),
                                           opts)
                    .estimates;
    inputs.push_back(records_path);
  } else {
    throw DataError("trend: provide --in records.csv or --estimates est.csv");
  }
  if (estimates.empty()) throw DataError("trend: no usable strata");

  swfdr::SubmissionsTable submissions;
  if (predictor == "submissions") {
    if (submissions_path.empty()) {
      throw DataError("trend: --predictor submissions needs --submissions");
    }
    std::ifstream in;
    read_file_or_throw(submissions_path, in);
    submissions = swfdr::read_submissions_csv(in);
    inputs.push_back(submissions_path);

    std::vector<std::string> missing;
    for (const auto& e : estimates) {
      if (!submissions.count({e.journal, e.year})) {
        missing.push_back(e.journal + "/" + std::to_string(e.year));
      }
    }
    if (!missing.empty()) {
      std::string msg = "trend: submissions table is missing";
      for (const auto& m : missing) msg += " " + m;
      throw DataError(msg);
    }
  }

  std::vector<swfdr::TrendPoint> points;
  points.reserve(estimates.size());
  for (const auto& e : estimates) {
    const double x = predictor == "year"
                         ? static_cast<double>(e.year)
                         : submissions.at({e.journal, e.year});
    points.push_back({e.journal, x, e.pi0_hat});
  }

  const swfdr::TrendFit fit = swfdr::fit_mixed_model(points);

  json result;
  result["schema_version"] = kSchemaVersion;
  result["predictor"] = predictor;
  result["intercept"] = fit.intercept;
  result["slope"] = fit.slope;
  result["slope_se"] = fit.slope_se;
  result["slope_pvalue"] = fit.slope_pvalue;
  result["var_random"] = fit.var_random;
  result["var_resid"] = fit.var_resid;
  result["lambda"] = fit.lambda;
  result["n_groups"] = fit.n_groups;
  result["n_points"] = fit.n_points;

  OutputSet out;
  if (!plot_path.empty()) {
    std::ostringstream csv;
    csv << "journal,year,x,pi0,sd,n_obs\n";
    char buf[96];
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      const auto& e = estimates[i];
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%d", e.year,
                    points[i].x, e.pi0_hat, e.sd, e.n_obs);
      csv << swfdr::csv::escape(e.journal) << ',' << buf << '\n';
    }
    out.stage(plot_path, csv.str());
  }
  out.stage(out_path, result.dump(2) + "\n");
  json overrides{{"predictor", predictor}};
  out.manifest("trend", inputs, seed, overrides, out_path);
  out.flush();
  return kExitOk;
}

int cmd_ppv(double prior, double alpha_level, double power,
            const std::string& out_path) {
  const double swfdr_value =
      swfdr::theoretical_swfdr({prior, alpha_level, power});
  json result{{"schema_version", kSchemaVersion},
              {"prior_true", prior},
              {"alpha", alpha_level},
              {"power", power},
              {"swfdr", swfdr_value}};
  if (out_path.empty()) {
    std::cout << result.dump(2) << "\n";
  } else {
    OutputSet out;
    out.stage(out_path, result.dump(2) + "\n");
    out.manifest("ppv", {}, 0, json::object(), out_path);
    out.flush();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimate the fraction of false positives among reported "
               "significant P-values"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Random seed (env SWFDR_SEED)")
      ->envname("SWFDR_SEED");

  // extract
  auto* extract = app.add_subcommand(
      "extract", "Extract P-value reports from a JSONL abstract corpus");
  std::string ex_in, ex_out, ex_diag;
  extract->add_option("--in", ex_in, "JSONL abstracts")->required();
  extract->add_option("--out", ex_out, "Records CSV")->required();
  extract->add_option("--diagnostics", ex_diag, "Diagnostics JSON path");

  // estimate
  auto* estimate = app.add_subcommand(
      "estimate", "Fit the mixture model to a records CSV");
  std::string es_in, es_out, es_by, es_strata, es_hist;
  int es_boot = 0, es_threads = 1, es_min_stratum = 30;
  double es_alpha = swfdr::kDefaultAlpha;
  estimate->add_option("--in", es_in, "Records CSV")->required();
  estimate->add_option("--out", es_out, "Result JSON")->required();
  estimate->add_option("--bootstrap", es_boot, "Bootstrap replicates");
  estimate->add_option("--by", es_by, "Stratify: journal, year, journal,year");
  estimate->add_option("--strata-out", es_strata, "Per-stratum CSV");
  estimate->add_option("--emit-hist", es_hist, "Histogram plot-data CSV");
  estimate->add_option("--threads", es_threads, "Bootstrap threads");
  estimate->add_option("--min-stratum", es_min_stratum,
                       "Minimum observations per stratum");
  estimate->add_option("--alpha", es_alpha, "Significance threshold");

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Draw a synthetic reported-P-value corpus");
  int si_n = 0;
  double si_pi0 = 0.5, si_a = 1.0, si_b = 10.0, si_censor = 0.0, si_round = 0.0;
  std::string si_out;
  simulate->add_option("--n", si_n, "Sample size")->required();
  simulate->add_option("--pi0", si_pi0, "True null weight")->required();
  simulate->add_option("--a", si_a, "Beta shape a");
  simulate->add_option("--b", si_b, "Beta shape b");
  simulate->add_option("--censor-frac", si_censor, "Censored fraction");
  simulate->add_option("--round-frac", si_round, "Rounded fraction");
  simulate->add_option("--out", si_out, "Records CSV")->required();

  // trend
  auto* trend = app.add_subcommand(
      "trend", "Per-stratum estimates and mixed-model trend fit");
  std::string tr_in, tr_est, tr_pred = "year", tr_subs, tr_out, tr_plot;
  int tr_min_stratum = 30, tr_boot = 0;
  trend->add_option("--in", tr_in, "Records CSV");
  trend->add_option("--estimates", tr_est, "Precomputed estimates CSV");
  trend->add_option("--predictor", tr_pred, "year or submissions");
  trend->add_option("--submissions", tr_subs, "Submissions CSV");
  trend->add_option("--out", tr_out, "TrendFit JSON")->required();
  trend->add_option("--plot-data", tr_plot, "Plot-ready CSV");
  trend->add_option("--min-stratum", tr_min_stratum,
                    "Minimum observations per stratum");
  trend->add_option("--stratum-bootstrap", tr_boot,
                    "Bootstrap replicates per stratum");

  // ppv
  auto* ppv = app.add_subcommand(
      "ppv", "Theoretical false-positive fraction among significant results");
  double pp_prior = 0.0, pp_alpha = 0.05, pp_power = 0.8;
  std::string pp_out;
  ppv->add_option("--prior", pp_prior, "Pre-study probability a hypothesis is true")
      ->required();
  ppv->add_option("--alpha", pp_alpha, "Significance level");
  ppv->add_option("--power", pp_power, "Power");
  ppv->add_option("--out", pp_out, "Result JSON (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (extract->parsed()) return cmd_extract(ex_in, ex_out, ex_diag, seed);
    if (estimate->parsed()) {
      return cmd_estimate(es_in, es_out, es_boot, seed, es_by, es_strata,
                          es_hist, es_threads, es_min_stratum, es_alpha);
    }
    if (simulate->parsed()) {
      return cmd_simulate(si_n, si_pi0, si_a, si_b, si_censor, si_round, seed,
                          si_out);
    }
    if (trend->parsed()) {
      return cmd_trend(tr_in, tr_est, tr_pred, tr_subs, tr_out, tr_plot,
                       tr_min_stratum, tr_boot, seed);
    }
    if (ppv->parsed()) return cmd_ppv(pp_prior, pp_alpha, pp_power, pp_out);
  } catch (const swfdr::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const swfdr::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
