#include "swfdr/parser.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <regex>
#include <sstream>

#include <array>

#include <json.hpp>

#include "swfdr/csv.hpp"
#include "swfdr/errors.hpp"

namespace swfdr {

namespace {

// Phrase: optional non-alphanumeric prefix (kills "p53", "BP=120"),
// then P, optional space, comparison, optional space.
const std::regex kPhraseRe("(^|[^A-Za-z0-9])([Pp] ?(<=|\xE2\x89\xA4|<|=) ?)");

struct NumberMatch {
  double value = 0.0;
  std::size_t length = 0;  // bytes consumed from the start position
};

bool scan_digits(const std::string& s, std::size_t& pos) {
  const std::size_t start = pos;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    ++pos;
  }
  return pos > start;
}

// Mantissa: 12, 12.34, .34, 12.
bool scan_mantissa(const std::string& s, std::size_t& pos) {
  const std::size_t start = pos;
  const bool int_part = scan_digits(s, pos);
  bool frac_part = false;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    frac_part = scan_digits(s, pos);
    if (!int_part && !frac_part) {
      pos = start;
      return false;
    }
  }
  return int_part || frac_part;
}

// Accepts "e-4", "E+4", "x10-4", "x10^-4", " x 10-4", and the Unicode
// multiplication sign in place of x. Returns the exponent or nullopt.
std::optional<long> scan_exponent(const std::string& s, std::size_t& pos) {
  const std::size_t start = pos;
  if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
    std::size_t q = pos + 1;
    if (q < s.size() && (s[q] == '+' || s[q] == '-')) ++q;
    const std::size_t digits_start = q;
    if (scan_digits(s, q)) {
      const long exp = std::stol(s.substr(pos + 1, q - pos - 1));
      (void)digits_start;
      pos = q;
      return exp;
    }
    pos = start;
    return std::nullopt;
  }

  std::size_t q = pos;
  if (q < s.size() && s[q] == ' ') ++q;
  if (q < s.size() && (s[q] == 'x' || s[q] == 'X')) {
    ++q;
  } else if (q + 1 < s.size() && static_cast<unsigned char>(s[q]) == 0xC3 &&
             static_cast<unsigned char>(s[q + 1]) == 0x97) {  // U+00D7
    q += 2;
  } else {
    return std::nullopt;
  }
  if (q < s.size() && s[q] == ' ') ++q;
  if (!(q + 1 < s.size() && s[q] == '1' && s[q + 1] == '0')) return std::nullopt;
  q += 2;
  if (q < s.size() && s[q] == '^') ++q;
  std::size_t exp_start = q;
  if (q < s.size() && (s[q] == '+' || s[q] == '-')) ++q;
  if (!scan_digits(s, q)) return std::nullopt;
  // "x10-4" reads as exponent -4; a bare "x104" reads as exponent 4.
  long exp = std::stol(s.substr(exp_start, q - exp_start));
  pos = q;
  return exp;
}

std::optional<NumberMatch> parse_number(const std::string& s,
                                        std::size_t start) {
  std::size_t pos = start;
  if (!scan_mantissa(s, pos)) return std::nullopt;
  const double mantissa = std::strtod(s.substr(start, pos - start).c_str(),
                                      nullptr);
  NumberMatch m;
  if (auto exp = scan_exponent(s, pos)) {
    m.value = mantissa * std::pow(10.0, static_cast<double>(*exp));
  } else {
    m.value = mantissa;
  }
  m.length = pos - start;
  return m;
}

Comparison comparison_from_symbol(const std::string& sym) {
  if (sym == "=") return Comparison::Equals;
  if (sym == "<") return Comparison::Less;
  return Comparison::LessEq;  // "<=" or U+2264
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(' ');
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(' ');
  return s.substr(b, e - b + 1);
}

// The numeric token as printed: everything in the raw span after the
// comparison symbol.
std::string printed_token(const std::string& raw_span) {
  static const std::array<std::string, 4> kSymbols = {"<=", "\xE2\x89\xA4",
                                                      "<", "="};
  for (const auto& sym : kSymbols) {
    const std::size_t at = raw_span.find(sym);
    if (at != std::string::npos) {
      return trim(raw_span.substr(at + sym.size()));
    }
  }
  return "";
}

// True when the printed token is a plain decimal equal to a multiple of
// 0.01 in [0, 0.05] with at most two significant decimal places
// ("0.010" qualifies, "0.0101" does not).
bool is_round_token(const std::string& token, int* bin_out) {
  if (token.empty()) return false;
  int dots = 0;
  for (char c : token) {
    if (c == '.') {
      if (++dots > 1) return false;
    } else if (!std::isdigit(static_cast<unsigned char>(c))) {
      return false;
    }
  }
  std::string t = token;
  if (dots == 1) {
    while (!t.empty() && t.back() == '0') t.pop_back();
    if (!t.empty() && t.back() == '.') t.pop_back();
  }
  const std::size_t dot = t.find('.');
  const std::size_t decimals = dot == std::string::npos ? 0 : t.size() - dot - 1;
  if (decimals > 2) return false;
  const double v = t.empty() ? 0.0 : std::strtod(t.c_str(), nullptr);
  const long k = std::lround(v * 100.0);
  if (std::fabs(v * 100.0 - static_cast<double>(k)) > 1e-9) return false;
  if (k < 0 || k > 5) return false;
  if (bin_out) *bin_out = static_cast<int>(k);
  return true;
}

}  // namespace

std::string comparison_to_string(Comparison c) {
  switch (c) {
    case Comparison::Equals: return "equals";
    case Comparison::Less: return "less";
    case Comparison::LessEq: return "leq";
  }
  return "equals";
}

std::optional<Comparison> comparison_from_string(const std::string& s) {
  if (s == "equals") return Comparison::Equals;
  if (s == "less") return Comparison::Less;
  if (s == "leq") return Comparison::LessEq;
  return std::nullopt;
}

std::vector<PValueRecord> extract_pvalues(const AbstractDoc& doc,
                                          ExtractionDiagnostics* diag) {
  std::vector<PValueRecord> records;
  const std::string& text = doc.text;

  for (auto it = std::sregex_iterator(text.begin(), text.end(), kPhraseRe);
       it != std::sregex_iterator(); ++it) {
    const std::smatch& m = *it;
    const std::size_t phrase_start =
        static_cast<std::size_t>(m.position(2));
    const std::size_t number_start =
        static_cast<std::size_t>(m.position(0) + m.length(0));
    const auto number = parse_number(text, number_start);
    if (!number) {
      if (diag) ++diag->unparseable_numerals;
      continue;
    }
    PValueRecord rec;
    rec.doc_id = doc.id;
    rec.journal = doc.journal;
    rec.year = doc.year;
    rec.comparison = comparison_from_symbol(m.str(3));
    rec.value = number->value;
    rec.raw_span =
        text.substr(phrase_start, number_start + number->length - phrase_start);
    records.push_back(std::move(rec));
  }
  return records;
}

Classified classify(const PValueRecord& record, double alpha) {
  Classified out;
  const double v = record.value;

  if (record.comparison == Comparison::Less ||
      record.comparison == Comparison::LessEq) {
    if (!(v > 0.0)) {
      out.exclude = ExcludeReason::NonpositiveBound;
    } else if (v > alpha) {
      out.exclude = ExcludeReason::AboveThreshold;
    } else {
      out.obs = Observation::censored(v, record.comparison == Comparison::Less,
                                      alpha);
    }
    return out;
  }

  if (v > alpha) {
    out.exclude = ExcludeReason::AboveThreshold;
    return out;
  }

  std::string token = printed_token(record.raw_span);
  if (token.empty()) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    token = buf;
  }
  int bin = -1;
  if (is_round_token(token, &bin)) {
    out.obs = Observation::rounded(bin);
  } else if (v > 0.0) {
    out.obs = Observation::exact(v, alpha);
  } else {
    out.exclude = ExcludeReason::NonpositiveBound;
  }
  return out;
}

CorpusResult ingest_corpus(std::istream& jsonl, double alpha) {
  CorpusResult result;
  CorpusDiagnostics& d = result.diagnostics;

  std::map<std::string, int> significant_per_journal;
  std::vector<int> records_per_doc;

  std::string line;
  while (std::getline(jsonl, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++d.n_docs;

    AbstractDoc doc;
    try {
      const auto j = nlohmann::json::parse(line);
      doc.id = j.at("id").get<std::string>();
      doc.journal = j.at("journal").get<std::string>();
      doc.year = j.at("year").get<int>();
      doc.text = j.at("text").get<std::string>();
      if (doc.id.empty() || doc.year < 1900 || doc.year > 2100) {
        throw DataError("invalid document fields");
      }
    } catch (const std::exception&) {
      ++d.n_malformed_docs;
      continue;
    }

    ExtractionDiagnostics ex;
    const auto records = extract_pvalues(doc, &ex);
    d.n_unparseable_numerals += ex.unparseable_numerals;
    if (!records.empty()) {
      ++d.n_docs_with_pvalue;
      records_per_doc.push_back(static_cast<int>(records.size()));
    }

    for (const auto& rec : records) {
      ++d.n_records;
      ++d.records_per_journal[rec.journal];
      ++d.records_per_year[rec.year];
      if (rec.value <= alpha) ++significant_per_journal[rec.journal];

      CorpusEntry entry{rec, classify(rec, alpha)};
      if (entry.classified.excluded()) {
        if (*entry.classified.exclude == ExcludeReason::AboveThreshold) {
          ++d.n_excluded_above_threshold;
        } else {
          ++d.n_excluded_nonpositive;
        }
      } else {
        switch (entry.classified.obs->kind) {
          case ObsKind::Exact: ++d.n_exact; break;
          case ObsKind::Censored: ++d.n_censored; break;
          case ObsKind::Rounded: ++d.n_rounded; break;
        }
      }
      result.entries.push_back(std::move(entry));
    }
  }

  for (const auto& [journal, total] : d.records_per_journal) {
    d.frac_significant_per_journal[journal] =
        total > 0 ? static_cast<double>(significant_per_journal[journal]) /
                        static_cast<double>(total)
                  : 0.0;
  }

  if (!records_per_doc.empty()) {
    std::sort(records_per_doc.begin(), records_per_doc.end());
    const std::size_t n = records_per_doc.size();
    d.median_records_per_reporting_doc =
        n % 2 == 1 ? records_per_doc[n / 2]
                   : 0.5 * (records_per_doc[n / 2 - 1] + records_per_doc[n / 2]);
  }
  return result;
}

void write_records_csv(std::ostream& out,
                       std::span<const PValueRecord> records) {
  out << "doc_id,journal,year,comparison,value,raw_span\n";
  char buf[32];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.value);
    out << csv::escape(r.doc_id) << ',' << csv::escape(r.journal) << ','
        << r.year << ',' << comparison_to_string(r.comparison) << ',' << buf
        << ',' << csv::escape(r.raw_span) << '\n';
  }
}

std::vector<PValueRecord> read_records_csv(std::istream& in) {
  std::vector<PValueRecord> records;
  std::string line;
  if (!std::getline(in, line)) return records;  // empty file: no rows
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 6) {
      throw DataError("records CSV line " + std::to_string(lineno) +
                      ": expected 6 fields, got " +
                      std::to_string(fields.size()));
    }
    PValueRecord r;
    r.doc_id = fields[0];
    r.journal = fields[1];
    try {
      r.year = std::stoi(fields[2]);
      r.value = std::stod(fields[4]);
    } catch (const std::exception&) {
      throw DataError("records CSV line " + std::to_string(lineno) +
                      ": bad numeric field");
    }
    const auto cmp = comparison_from_string(fields[3]);
    if (!cmp) {
      throw DataError("records CSV line " + std::to_string(lineno) +
                      ": unknown comparison '" + fields[3] + "'");
    }
    r.comparison = *cmp;
    r.raw_span = fields[5];
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace swfdr
