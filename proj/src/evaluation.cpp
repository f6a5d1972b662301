#include "cspun/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "cspun/error.hpp"
#include "cspun/keywords.hpp"
#include "cspun/text.hpp"

namespace cspun {

namespace {

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::string head_lemma(std::string_view phrase) {
  const auto tokens = words(phrase);
  return tokens.empty() ? std::string() : lemmatize(tokens.back());
}

}  // namespace

// ---------------------------------------------------------------------------
// Incorporation

bool incorporates_pun_word(std::string_view text, const PunPair& pair) {
  return lemma_set(text).contains(lemmatize(pair.pun_word));
}

IncorporationResult incorporation_rate(const std::vector<GenerationRecord>& records,
                                       IncorporationMode mode) {
  if (records.empty()) throw Error(ErrorKind::kInvalidArgument, "no generation records");
  IncorporationResult result;
  result.records = records.size();
  std::size_t keywords = 0;
  std::size_t keyword_hits = 0;
  for (const auto& r : records) {
    const auto lemmas = lemma_set(r.text);
    if (mode == IncorporationMode::kPunWord) {
      if (lemmas.contains(lemmatize(r.pair.pun_word))) ++result.hits;
      continue;
    }
    bool all = true;
    for (const auto& kw : r.context.keywords) {
      ++keywords;
      if (lemmas.contains(head_lemma(kw))) {
        ++keyword_hits;
      } else {
        all = false;
      }
    }
    if (all) ++result.hits;
  }
  result.rate = percent(result.hits, result.records);
  result.micro_rate = mode == IncorporationMode::kPunWord ? result.rate
                                                          : percent(keyword_hits, keywords);
  return result;
}

// ---------------------------------------------------------------------------
// TP@N

namespace {

std::string gold_key(const ContextSpec& context, const PunPair& pair) {
  return context.key() + '\x1f' + pair.pun_word + '\x1f' + pair.alt_word;
}

}  // namespace

GoldLabels::GoldLabels(const std::vector<CompatibilityRecord>& records) {
  for (const auto& r : records) labels_.try_emplace(gold_key(r.context, r.pair), r.label);
}

std::optional<int> GoldLabels::find(const ContextSpec& context, const PunPair& pair) const {
  auto it = labels_.find(gold_key(context, pair));
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

TpResult tp_at_n(const std::vector<ContextRetrieval>& retrievals, const GoldLabels& gold,
                 std::size_t n) {
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "n must be at least 1", std::nullopt, "n");
  TpResult result;
  for (const auto& r : retrievals) {
    const auto limit = std::min(n, r.ranked.size());
    for (std::size_t i = 0; i < limit; ++i) {
      const auto label = gold.find(r.context, r.ranked[i].pair);
      if (!label) {
        ++result.unlabeled;
        continue;
      }
      ++result.labeled;
      if (*label == 1) ++result.positive;
    }
  }
  if (result.labeled == 0)
    throw Error(ErrorKind::kInvalidArgument, "no retrieved slot has a gold label");
  result.rate = percent(result.positive, result.labeled);
  return result;
}

// ---------------------------------------------------------------------------
// Classifier metrics

ClassifierMetrics classifier_metrics(const std::vector<int>& predictions,
                                     const std::vector<int>& golds) {
  if (predictions.empty()) throw Error(ErrorKind::kInvalidArgument, "no predictions");
  if (predictions.size() != golds.size())
    throw Error(ErrorKind::kInvalidArgument, "predictions and golds differ in length");
  ClassifierMetrics m;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool p = predictions[i] != 0;
    const bool g = golds[i] != 0;
    if (p && g) ++m.tp;
    else if (p && !g) ++m.fp;
    else if (!p && g) ++m.fn;
    else ++m.tn;
  }
  const auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  const auto f1 = [](double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); };
  // Positive class, then negative class with the roles of the cells swapped.
  const double p1 = ratio(m.tp, m.tp + m.fp), r1 = ratio(m.tp, m.tp + m.fn);
  const double p0 = ratio(m.tn, m.tn + m.fn), r0 = ratio(m.tn, m.tn + m.fp);
  m.precision = 100.0 * (p1 + p0) / 2.0;
  m.recall = 100.0 * (r1 + r0) / 2.0;
  m.f1 = 100.0 * (f1(p1, r1) + f1(p0, r0)) / 2.0;
  m.accuracy = percent(m.tp + m.tn, predictions.size());
  return m;
}

// ---------------------------------------------------------------------------
// Fleiss' kappa

double fleiss_kappa(const std::vector<std::vector<int>>& table) {
  if (table.empty()) throw Error(ErrorKind::kInvalidArgument, "rating table is empty");
  const auto categories = table.front().size();
  if (categories == 0) throw Error(ErrorKind::kInvalidArgument, "rating table has no categories");
  long long raters = -1;
  std::vector<double> column_totals(categories, 0.0);
  double agreement_sum = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    if (row.size() != categories)
      throw Error(ErrorKind::kInvalidArgument,
                  "item " + std::to_string(i + 1) + " has a different number of categories");
    long long n = 0;
    long long same_pairs = 0;
    for (std::size_t j = 0; j < categories; ++j) {
      if (row[j] < 0) throw Error(ErrorKind::kInvalidArgument, "negative rating count");
      n += row[j];
      same_pairs += static_cast<long long>(row[j]) * (row[j] - 1);
      column_totals[j] += row[j];
    }
    if (raters < 0) raters = n;
    if (n != raters)
      throw Error(ErrorKind::kInvalidArgument,
                  "item " + std::to_string(i + 1) + " has " + std::to_string(n) +
                      " raters, expected " + std::to_string(raters));
    if (raters < 2) throw Error(ErrorKind::kInvalidArgument, "need at least 2 raters per item");
    agreement_sum += static_cast<double>(same_pairs) / static_cast<double>(n * (n - 1));
  }
  const double items = static_cast<double>(table.size());
  const double total = items * static_cast<double>(raters);
  const double observed = agreement_sum / items;
  double chance = 0.0;
  for (const double c : column_totals) chance += (c / total) * (c / total);
  if (chance >= 1.0 - 1e-15) {
    if (observed >= 1.0 - 1e-15) return 1.0;
    throw Error(ErrorKind::kInvalidArgument, "degenerate marginals");
  }
  return (observed - chance) / (1.0 - chance);
}

// ---------------------------------------------------------------------------
// Human baseline

const CompatibilityRecord& select_human_baseline(const std::vector<CompatibilityRecord>& records,
                                                 const ContextSpec& context, std::uint64_t seed) {
  const auto key = context.key();
  std::vector<std::size_t> with_difficulty;
  std::vector<std::size_t> without_difficulty;
  int best = 6;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.label != 1 || !r.human_pun || r.context.key() != key) continue;
    if (!r.difficulty) {
      without_difficulty.push_back(i);
      continue;
    }
    if (*r.difficulty < best) {
      best = *r.difficulty;
      with_difficulty.clear();
    }
    if (*r.difficulty == best) with_difficulty.push_back(i);
  }
  const auto& pool = with_difficulty.empty() ? without_difficulty : with_difficulty;
  if (pool.empty())
    throw Error(ErrorKind::kNotFound,
                "no label-1 record with a human pun for context '" + context.joined(", ") + "'");
  std::mt19937_64 engine(seed ^ fnv1a64(key));
  return records[pool[uniform_below(engine, pool.size())]];
}

// ---------------------------------------------------------------------------
// CSV

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  const auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
    any = false;
  };
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw Error(ErrorKind::kParse, "unterminated quoted CSV field");
  if (any) end_row();
  return rows;
}

// ---------------------------------------------------------------------------
// Judgments

void export_human_eval(std::ostream& out, const std::vector<GenerationRecord>& records) {
  for (std::size_t i = 0; i < kSheetColumns.size(); ++i) out << (i ? "," : "") << kSheetColumns[i];
  out << '\n';
  for (const auto& r : records) {
    out << csv_escape(r.generation_id) << ',' << csv_escape(r.context.joined(", ")) << ','
        << csv_escape(r.pair.pun_word) << ',' << csv_escape(r.pair.alt_word) << ','
        << csv_escape(r.pair.pun_gloss) << ',' << csv_escape(r.pair.alt_gloss) << ','
        << csv_escape(r.text) << ",,\n";
  }
}

void export_human_eval(const std::filesystem::path& path,
                       const std::vector<GenerationRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kNotFound, "cannot write " + path.string());
  export_human_eval(out, records);
}

void write_judgment_row(std::ostream& out, const Judgment& judgment, bool with_header) {
  if (with_header) {
    for (std::size_t i = 0; i < kSheetColumns.size(); ++i)
      out << (i ? "," : "") << kSheetColumns[i];
    out << '\n';
  }
  out << csv_escape(judgment.generation_id) << ",,,,,,," << csv_escape(judgment.judge_id) << ','
      << judgment.success << '\n';
}

std::vector<Judgment> read_judgments(std::istream& in, const std::set<std::string>* known_ids) {
  const auto rows = parse_csv(in);
  if (rows.empty()) return {};
  const auto& header = rows.front();
  const auto column = [&](std::string_view name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw Error(ErrorKind::kParse, "sheet header lacks column '" + std::string(name) + "'", 1);
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto id_col = column("generation_id");
  const auto judge_col = column("judge_id");
  const auto success_col = column("success");

  std::vector<Judgment> judgments;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto line = r + 1;
    const auto cell = [&](std::size_t c) { return c < row.size() ? std::string(trim(row[c])) : ""; };
    const auto success = cell(success_col);
    if (success.empty()) continue;
    Judgment j{cell(id_col), cell(judge_col), 0};
    if (j.generation_id.empty())
      throw Error(ErrorKind::kValidation, "empty generation id", line, "generation_id");
    if (j.judge_id.empty())
      throw Error(ErrorKind::kValidation, "judged row without judge id", line, "judge_id");
    if (success == "1") {
      j.success = 1;
    } else if (success != "0") {
      throw Error(ErrorKind::kValidation, "success must be 0 or 1", line, "success");
    }
    if (known_ids && !known_ids->contains(j.generation_id))
      throw Error(ErrorKind::kNotFound, "unknown generation id '" + j.generation_id + "'", line,
                  "generation_id");
    if (!seen.emplace(j.generation_id, j.judge_id).second)
      throw Error(ErrorKind::kConflict,
                  "duplicate judgment for (" + j.generation_id + ", " + j.judge_id + ")", line);
    judgments.push_back(std::move(j));
  }
  return judgments;
}

JudgmentSummary summarize_judgments(const std::vector<Judgment>& judgments) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> votes;  // (successes, total)
  for (const auto& j : judgments) {
    auto& v = votes[j.generation_id];
    v.first += static_cast<std::size_t>(j.success);
    ++v.second;
  }
  JudgmentSummary summary;
  summary.judgments = judgments.size();
  summary.generations = votes.size();
  for (const auto& [id, v] : votes) {
    const bool majority = 2 * v.first > v.second;
    summary.per_generation[id] = majority;
    if (majority) ++summary.successes;
  }
  summary.success_rate = percent(summary.successes, summary.generations);
  return summary;
}

JudgmentSummary import_judgments(const std::filesystem::path& path,
                                 const std::set<std::string>* known_ids) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open judgment sheet " + path.string());
  return summarize_judgments(read_judgments(in, known_ids));
}

// ---------------------------------------------------------------------------
// Reports

MetricsReport end_to_end_report(const std::vector<PipelineRun>& runs,
                                const std::optional<JudgmentSummary>& judgments,
                                std::map<std::string, std::string> provenance) {
  if (!provenance.contains("config_hash"))
    throw Error(ErrorKind::kInvalidArgument, "report provenance needs a config_hash");
  MetricsReport report;
  std::set<std::string> backends;
  for (const auto& run : runs) {
    ReportRow row{run.retrieval, run.generation, {}, {}};
    row.counts["records"] = run.records.size();
    if (!run.records.empty()) {
      const auto ctx = incorporation_rate(run.records, IncorporationMode::kContext);
      const auto pun = incorporation_rate(run.records, IncorporationMode::kPunWord);
      row.metrics["context_incorporation"] = ctx.rate;
      row.metrics["context_incorporation_micro"] = ctx.micro_rate;
      row.metrics["pun_word_incorporation"] = pun.rate;
    }
    if (judgments) {
      std::size_t judged = 0;
      std::size_t successes = 0;
      for (const auto& r : run.records) {
        auto it = judgments->per_generation.find(r.generation_id);
        if (it == judgments->per_generation.end()) continue;
        ++judged;
        if (it->second) ++successes;
      }
      row.counts["judged"] = judged;
      if (judged) row.metrics["success"] = percent(successes, judged);
    }
    backends.insert(run.generation);
    report.rows.push_back(std::move(row));
  }
  if (!provenance.contains("backends")) {
    provenance["backends"] = join(std::vector<std::string>(backends.begin(), backends.end()), ",");
  }
  report.provenance = std::move(provenance);
  return report;
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["provenance"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : provenance) j["provenance"][k] = v;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json r;
    r["retrieval"] = row.retrieval;
    r["generation"] = row.generation;
    r["metrics"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : row.metrics) r["metrics"][k] = std::round(v * 100.0) / 100.0;
    r["counts"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : row.counts) r["counts"][k] = v;
    j["rows"].push_back(std::move(r));
  }
  return j;
}

std::string MetricsReport::to_table() const {
  const bool with_success = std::any_of(rows.begin(), rows.end(), [](const ReportRow& r) {
    return r.metrics.contains("success");
  });
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %-16s %9s %9s", "retrieval", "generation", "C incorp",
                "pw incorp");
  out << buf << (with_success ? "  success" : "") << '\n';
  const auto cell = [](const ReportRow& r, const char* key) {
    char b[32];
    auto it = r.metrics.find(key);
    if (it == r.metrics.end()) return std::string("-");
    std::snprintf(b, sizeof b, "%.2f", it->second);
    return std::string(b);
  };
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-14s %-16s %9s %9s", r.retrieval.c_str(),
                  r.generation.c_str(), cell(r, "context_incorporation").c_str(),
                  cell(r, "pun_word_incorporation").c_str());
    out << buf;
    if (with_success) {
      std::snprintf(buf, sizeof buf, " %8s", cell(r, "success").c_str());
      out << buf;
    }
    out << '\n';
  }
  for (const auto& [k, v] : provenance) out << "# " << k << ": " << v << '\n';
  return out.str();
}

}  // namespace cspun
