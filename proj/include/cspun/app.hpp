#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "cspun/backend.hpp"
#include "cspun/corpus.hpp"
#include "cspun/embeddings.hpp"
#include "cspun/evaluation.hpp"
#include "cspun/generation.hpp"
#include "cspun/keywords.hpp"
#include "cspun/retrieval.hpp"

namespace cspun {

enum class PromptStyle { kPun, kAmbipun };

const char* to_string(PromptStyle style);
PromptStyle parse_prompt_style(std::string_view text);

/// Runtime configuration. The file format is one `key = value` per line with
/// `#` comments; relative paths resolve against the file's directory.
struct AppConfig {
  std::optional<std::filesystem::path> cup_file;
  std::optional<std::filesystem::path> pair_lexicon;
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::filesystem::path> stopwords;    // SMART list when unset
  std::optional<std::filesystem::path> pos_lexicon;  // no POS filtering when unset
  std::optional<std::filesystem::path> gloss_table;
  std::optional<std::filesystem::path> feedback_log;
  std::optional<std::filesystem::path> ui_dir;

  std::string classifier_endpoint;                    // empty: no classifier
  std::string generator_endpoint = "stub:template";  // empty: no generator
  RetrievalMethod retrieval_method = RetrievalMethod::kUnsupervised;
  std::size_t k = 5;
  PromptStyle prompt_style = PromptStyle::kPun;
  DecodeParams decode;
  std::string bind_host = "127.0.0.1";
  int bind_port = 8080;
  std::uint64_t seed = 20220101;

  static AppConfig load(const std::filesystem::path& path);
  static AppConfig parse(std::istream& in, const std::filesystem::path& base_dir = {});

  /// Sets one key from its textual value; `line` only decorates errors.
  void set(std::string_view key, std::string_view value, std::optional<std::size_t> line = {},
           const std::filesystem::path& base_dir = {});

  /// Referenced input paths must exist, the feedback log's directory must
  /// exist, and k >= 1.
  void validate() const;

  /// Sorted `key = value` lines covering every setting.
  std::string canonical() const;
  std::string hash() const;
};

inline constexpr std::array<std::string_view, 18> kConfigKeys = {
    "cup_file",   "pair_lexicon",        "embeddings",         "stopwords",
    "pos_lexicon", "gloss_table",        "feedback_log",       "ui_dir",
    "classifier_endpoint", "generator_endpoint", "retrieval_method", "k",
    "prompt_style", "beam_size",         "max_target_len",     "bind_host",
    "bind_port",  "seed"};

/// Everything loaded from an AppConfig. Immutable once built.
struct Resources {
  std::optional<CupDataset> cup;
  PairCatalog catalog;
  std::optional<EmbeddingTable> embeddings;
  StopwordList stopwords;
  PosLexicon lexicon;
};

struct ResourceOptions {
  /// Restrict stored embedding vectors to the tokens the catalog and the
  /// CUP contexts need.
  bool restrict_embeddings = false;
  bool load_embeddings = true;
};

/// The catalog comes from the pair lexicon when one is configured, else
/// from the CUP records.
Resources load_resources(const AppConfig& config, const ResourceOptions& options = {});

/// Lowercased tokens (split on space, '_' and '-') of every catalog word and
/// every context keyword in `records`.
std::unordered_set<std::string> embedding_vocabulary(const PairCatalog& catalog,
                                                     const std::vector<CompatibilityRecord>& records);

PromptRecord build_prompt(PromptStyle style, const ContextSpec& context, const PunPair& pair);

struct BatchOptions {
  std::size_t k = 1;
  PromptStyle style = PromptStyle::kPun;
  DecodeParams decode;
  RetryPolicy retry;
};

/// Retrieves the top-k pairs of each context without supervision and asks
/// `generator` for one text per retrieved pair, in context order.
std::vector<GenerationRecord> run_batch(const std::vector<ContextSpec>& contexts,
                                        const PairCatalog& catalog, const EmbeddingTable& table,
                                        GeneratorClient& generator, const BatchOptions& options);

/// Distinct contexts of the records in `split` (all records when unset), in
/// first-occurrence order.
std::vector<ContextSpec> distinct_contexts(const std::vector<CompatibilityRecord>& records,
                                           std::optional<Split> split);

/// TP@n of unsupervised retrieval over the distinct contexts of `split`.
TpResult evaluate_unsupervised_tp(const std::vector<CompatibilityRecord>& records,
                                  const PairCatalog& catalog, const EmbeddingTable& table,
                                  std::size_t n, std::optional<Split> split);

/// Line-delimited GenerationRecord files.
nlohmann::ordered_json to_json(const GenerationRecord& record);
GenerationRecord generation_record_from_json(const nlohmann::json& j);
void write_generation_records(std::ostream& out, const std::vector<GenerationRecord>& records);
std::vector<GenerationRecord> read_generation_records(std::istream& in);

}  // namespace cspun
