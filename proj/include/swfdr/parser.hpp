#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swfdr/model.hpp"

namespace swfdr {

struct AbstractDoc {
  std::string id;
  std::string journal;
  int year = 0;
  std::string text;
};

enum class Comparison { Equals, Less, LessEq };

std::string comparison_to_string(Comparison c);
std::optional<Comparison> comparison_from_string(const std::string& s);

/// One extracted P-value report. raw_span reproduces the matched
/// substring verbatim from the source text.
struct PValueRecord {
  std::string doc_id;
  std::string journal;
  int year = 0;
  Comparison comparison = Comparison::Equals;
  double value = 0.0;
  std::string raw_span;
};

struct ExtractionDiagnostics {
  int unparseable_numerals = 0;
};

/// Find every "P =" / "P <" / "P <=" (ASCII or Unicode <=) phrase followed
/// by a number and return one record per match, in document order.
/// Matching is case-insensitive on P; at most one space may separate the
/// tokens. Scientific notation (1.3e-4, 1.3x10^-4, 1.3x10-4, and the
/// Unicode multiplication sign) is folded to its numeric value.
std::vector<PValueRecord> extract_pvalues(
    const AbstractDoc& doc, ExtractionDiagnostics* diag = nullptr);

enum class ExcludeReason { AboveThreshold, NonpositiveBound };

/// classify() result: either a model-ready observation or an exclusion
/// with its reason.
struct Classified {
  std::optional<Observation> obs;
  std::optional<ExcludeReason> exclude;

  bool excluded() const { return exclude.has_value(); }
};

/// Map a record to Exact/Censored/Rounded/Excluded. "<" and "<=" become
/// censored bounds; "=" with a printed round token (multiple of 0.01 in
/// [0, 0.05], at most two significant decimals) becomes Rounded, any
/// other in-range "=" value Exact. Values above alpha are excluded.
Classified classify(const PValueRecord& record, double alpha = kDefaultAlpha);

struct CorpusDiagnostics {
  int n_docs = 0;
  int n_malformed_docs = 0;
  int n_docs_with_pvalue = 0;
  int n_records = 0;
  int n_unparseable_numerals = 0;
  int n_excluded_above_threshold = 0;
  int n_excluded_nonpositive = 0;
  int n_exact = 0;
  int n_censored = 0;
  int n_rounded = 0;
  double median_records_per_reporting_doc = 0.0;
  std::map<std::string, int> records_per_journal;
  std::map<int, int> records_per_year;
  /// Fraction of extracted records with value <= 0.05, per journal.
  std::map<std::string, double> frac_significant_per_journal;
};

struct CorpusEntry {
  PValueRecord record;
  Classified classified;
};

struct CorpusResult {
  std::vector<CorpusEntry> entries;
  CorpusDiagnostics diagnostics;
};

/// Read a JSON-lines stream ({"id","journal","year","text"} per line),
/// extract and classify every P-value. Malformed lines are counted, not
/// fatal.
CorpusResult ingest_corpus(std::istream& jsonl, double alpha = kDefaultAlpha);

// CSV record format: header doc_id,journal,year,comparison,value,raw_span
void write_records_csv(std::ostream& out,
                       std::span<const PValueRecord> records);
std::vector<PValueRecord> read_records_csv(std::istream& in);

}  // namespace swfdr
