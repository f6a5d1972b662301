#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cspun/generation.hpp"
#include "cspun/retrieval.hpp"
#include "cspun/types.hpp"
#include "json.hpp"

namespace cspun {

// ---------------------------------------------------------------------------
// Incorporation

enum class IncorporationMode { kPunWord, kContext };

struct IncorporationResult {
  double rate = 0.0;        // percentage of records
  double micro_rate = 0.0;  // context mode: percentage of keywords; pun mode: == rate
  std::size_t records = 0;
  std::size_t hits = 0;
};

/// Pun-word mode: the text's lemma set contains lemmatize(pun_word).
/// Context mode: every keyword's head-word lemma is in the text's lemma set.
IncorporationResult incorporation_rate(const std::vector<GenerationRecord>& records,
                                       IncorporationMode mode);

bool incorporates_pun_word(std::string_view text, const PunPair& pair);

// ---------------------------------------------------------------------------
// TP@N

struct ContextRetrieval {
  ContextSpec context;
  std::vector<ScoredPair> ranked;
};

struct TpResult {
  double rate = 0.0;
  std::size_t labeled = 0;
  std::size_t positive = 0;
  std::size_t unlabeled = 0;  // top-n slots without a gold label (excluded)
};

/// Gold labels keyed by (context key, pun_word, alt_word); the first
/// record for a key wins.
class GoldLabels {
 public:
  explicit GoldLabels(const std::vector<CompatibilityRecord>& records);
  std::optional<int> find(const ContextSpec& context, const PunPair& pair) const;
  std::size_t size() const { return labels_.size(); }

 private:
  std::map<std::string, int> labels_;
};

/// 100 * positives / labeled slots over the top-n of every context.
/// Throws Error(kInvalidArgument) when no slot carries a label.
TpResult tp_at_n(const std::vector<ContextRetrieval>& retrievals, const GoldLabels& gold,
                 std::size_t n);

// ---------------------------------------------------------------------------
// Classifier metrics

struct ClassifierMetrics {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Macro-averaged over the two classes, as percentages. A class whose
/// precision or recall has an empty denominator scores 0 for that term.
ClassifierMetrics classifier_metrics(const std::vector<int>& predictions,
                                     const std::vector<int>& golds);

// ---------------------------------------------------------------------------
// Agreement

/// Fleiss' kappa for an items x categories table of rating counts. Every
/// row must sum to the same number of raters (>= 2).
double fleiss_kappa(const std::vector<std::vector<int>>& table);

// ---------------------------------------------------------------------------
// Human baseline

/// Least-difficult human pun among label-1 records for `context`; ties are
/// broken by a seeded draw. Records without a difficulty are only used when
/// none of the candidates carries one.
const CompatibilityRecord& select_human_baseline(const std::vector<CompatibilityRecord>& records,
                                                 const ContextSpec& context, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Human judgments

struct Judgment {
  std::string generation_id;
  std::string judge_id;
  int success = 0;
};

inline constexpr std::array<std::string_view, 9> kSheetColumns = {
    "generation_id", "context", "pun_word", "alt_word", "pun_gloss",
    "alt_gloss",     "text",    "judge_id", "success"};

/// Writes a judging sheet: one row per generation, judge_id and success empty.
void export_human_eval(std::ostream& out, const std::vector<GenerationRecord>& records);
void export_human_eval(const std::filesystem::path& path,
                       const std::vector<GenerationRecord>& records);

/// Appends one judged row (used by the service's feedback log). Writes the
/// header first when the stream is at offset 0.
void write_judgment_row(std::ostream& out, const Judgment& judgment, bool with_header);

struct JudgmentSummary {
  double success_rate = 0.0;  // percentage of judged generations with a majority of successes
  std::size_t generations = 0;
  std::size_t successes = 0;
  std::size_t judgments = 0;
  std::map<std::string, bool> per_generation;
};

/// Reads a sheet (columns by header name; only generation_id, judge_id and
/// success are required). Rows with an empty success cell are unjudged.
/// Duplicate (generation_id, judge_id) pairs and, when `known_ids` is
/// given, unknown generation ids raise Error.
std::vector<Judgment> read_judgments(std::istream& in,
                                     const std::set<std::string>* known_ids = nullptr);
JudgmentSummary summarize_judgments(const std::vector<Judgment>& judgments);
JudgmentSummary import_judgments(const std::filesystem::path& path,
                                 const std::set<std::string>* known_ids = nullptr);

/// RFC 4180 quoting helpers.
std::string csv_escape(std::string_view field);
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Reports

struct PipelineRun {
  std::string retrieval;   // e.g. "unsupervised", "human"
  std::string generation;  // backend id
  std::vector<GenerationRecord> records;
};

struct ReportRow {
  std::string retrieval;
  std::string generation;
  std::map<std::string, double> metrics;
  std::map<std::string, std::size_t> counts;
};

struct MetricsReport {
  std::vector<ReportRow> rows;
  std::map<std::string, std::string> provenance;

  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

/// Context and pun-word incorporation per run, plus success % when
/// judgments are supplied. `provenance` must include "config_hash".
MetricsReport end_to_end_report(const std::vector<PipelineRun>& runs,
                                const std::optional<JudgmentSummary>& judgments,
                                std::map<std::string, std::string> provenance);

}  // namespace cspun
