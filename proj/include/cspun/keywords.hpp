#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cspun/types.hpp"

namespace cspun {

/// The 571-entry SMART stop list (570 distinct words).
std::span<const std::string_view> smart_stopwords();

class StopwordList {
 public:
  StopwordList() = default;
  explicit StopwordList(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  static StopwordList smart();
  /// One token per line; blank lines and '#' comments are ignored.
  static StopwordList load(const std::filesystem::path& path);

  bool contains(std::string_view token) const { return words_.contains(std::string(token)); }
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

 private:
  std::unordered_set<std::string> words_;
};

// ---------------------------------------------------------------------------
// Lemmatizer

/// Irregular forms that override the suffix rules (ran -> run, geese -> goose).
const std::map<std::string, std::string, std::less<>>& lemma_exceptions();

/// Words the suffix rules must never touch ("during", "this", "series").
const std::set<std::string, std::less<>>& protected_lemmas();

/// Suffix rules, in application order. Exposed so tests can sweep them.
struct SuffixRule {
  std::string_view suffix;
  std::string_view replacement;
  std::string_view example;  // an inflected form the rule is meant for
  std::string_view expected;
};
std::span<const SuffixRule> lemma_rules();

/// Rule-based lemma of one lowercase word. Applied to a fixed point, so
/// lemmatize(lemmatize(w)) == lemmatize(w) for every input.
std::string lemmatize(std::string_view token);

/// Lemma of every token in `text`.
std::unordered_set<std::string> lemma_set(std::string_view text);

// ---------------------------------------------------------------------------
// RAKE

struct ScoredPhrase {
  std::vector<std::string> tokens;
  double score = 0.0;

  std::string text() const;
  bool operator==(const ScoredPhrase&) const = default;
};

struct RakeOptions {
  std::size_t max_phrase_len = 3;  // longer candidate runs are dropped
};

/// Rapid automatic keyword extraction. Candidates are maximal runs of
/// non-stopword tokens; word score is degree/frequency over the candidate
/// co-occurrence graph and a phrase scores the sum of its words. Distinct
/// phrases are returned by descending score, ties in first-occurrence order.
std::vector<ScoredPhrase> rake_extract(std::string_view text, const StopwordList& stopwords,
                                       const RakeOptions& options = {});

// ---------------------------------------------------------------------------
// Part-of-speech filtering

enum class CoarseTag : unsigned { kNoun = 1, kVerb = 2, kAdj = 4, kAdv = 8, kOther = 16 };

std::optional<CoarseTag> parse_tag(std::string_view text);

class PosLexicon {
 public:
  /// `lemma TAB tag,tag,...`; tags are noun|verb|adj|adv|other (n/v/a/r also accepted).
  static PosLexicon load(const std::filesystem::path& path);

  void add(std::string lemma, CoarseTag tag);
  /// Tag bitmask, or nullopt for unknown lemmas.
  std::optional<unsigned> tags(std::string_view lemma) const;
  std::size_t size() const { return tags_.size(); }
  void save(std::ostream& out) const;

 private:
  std::map<std::string, unsigned, std::less<>> tags_;
};

/// Keeps phrases whose head (last) word is a noun or verb; unknown head
/// words are kept.
std::vector<ScoredPhrase> pos_filter(const std::vector<ScoredPhrase>& phrases,
                                     const PosLexicon& lexicon);

// ---------------------------------------------------------------------------
// Context construction

struct KeywordOptions {
  RakeOptions rake;
  std::size_t max_keywords = 8;
};

/// Lemma-based exclusion test: true when any token of `phrase` lemmatizes to
/// one of `excluded_lemmas`.
bool mentions_lemma(std::string_view phrase, const std::set<std::string>& excluded_lemmas);

/// Keywords from free text: RAKE, POS filter, exclusion, cap.
ContextSpec build_context(std::string_view text, const std::optional<PunPair>& exclude,
                          const StopwordList& stopwords, const PosLexicon& lexicon,
                          const KeywordOptions& options = {});

/// Keywords given directly: lowercased, deduplicated, exclusion applied.
ContextSpec build_context(const std::vector<std::string>& keywords,
                          const std::optional<PunPair>& exclude,
                          const KeywordOptions& options = {});

/// Shared core: drop phrases mentioning an excluded lemma, dedup, cap.
/// Throws Error(kEmptyContext) if nothing survives.
ContextSpec finish_context(const std::vector<std::string>& phrases,
                           const std::set<std::string>& excluded_lemmas,
                           std::size_t max_keywords,
                           std::optional<std::string> source_sentence = std::nullopt);

}  // namespace cspun
