#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cspun {

enum class PairKind { kHeterographic, kHomographic };

const char* to_string(PairKind kind);

/// A pun word, its alternative word and one sense gloss for each. For
/// homographic puns both words are the same polyseme.
struct PunPair {
  std::string pun_word;
  std::string alt_word;
  std::string pun_gloss;
  std::string alt_gloss;
  std::optional<std::string> pun_sense_key;
  std::optional<std::string> alt_sense_key;

  PairKind kind() const {
    return pun_word == alt_word ? PairKind::kHomographic
                                : PairKind::kHeterographic;
  }

  /// Lowercases both words and checks the invariants; throws
  /// Error(kValidation) naming the bad field.
  static PunPair make(std::string_view pun_word, std::string_view alt_word,
                      std::string pun_gloss, std::string alt_gloss,
                      std::optional<std::string> pun_sense_key = std::nullopt,
                      std::optional<std::string> alt_sense_key = std::nullopt);

  bool operator==(const PunPair&) const = default;
};

/// Ordered keyword phrases a pun has to situate in.
struct ContextSpec {
  static constexpr std::size_t kMaxKeywords = 16;
  static constexpr std::size_t kMaxPhraseTokens = 5;

  std::vector<std::string> keywords;
  std::optional<std::string> source_sentence;

  /// Trims, lowercases and collapses inner whitespace of each phrase, then
  /// validates count, phrase length and uniqueness.
  static ContextSpec make(const std::vector<std::string>& keywords,
                          std::optional<std::string> source_sentence = std::nullopt);

  /// Parses "hunts, deer" style input (comma or '|' separated).
  static ContextSpec parse(std::string_view joined);

  /// Keywords joined by ", " as they appear in prompts.
  std::string joined(std::string_view sep = ", ") const;

  /// Order-insensitive identity used to match contexts across files.
  std::string key() const;

  bool operator==(const ContextSpec&) const = default;
};

enum class Split { kTrain, kDev, kTest };

const char* to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

/// One annotated (context, pun pair) tuple.
struct CompatibilityRecord {
  ContextSpec context;
  PunPair pair;
  int label = 0;
  std::optional<std::string> human_pun;
  std::optional<int> difficulty;
  std::optional<Split> split;

  bool operator==(const CompatibilityRecord&) const = default;
};

}  // namespace cspun
