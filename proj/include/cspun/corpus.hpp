#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cspun/types.hpp"

namespace cspun {

/// sense_key -> gloss text.
class GlossTable {
 public:
  /// Two columns, `sense_key TAB gloss`.
  static GlossTable load(const std::filesystem::path& path);
  static GlossTable parse(std::istream& in);

  void add(std::string sense_key, std::string gloss);
  const std::string* find(std::string_view sense_key) const;
  std::size_t size() const { return glosses_.size(); }
  void save(std::ostream& out) const;

 private:
  std::map<std::string, std::string, std::less<>> glosses_;
};

// ---------------------------------------------------------------------------
// SemEval-2017 Task 7 style input

/// One annotated pun from the SemEval text/gold files.
struct PunEntry {
  std::string text_id;
  std::string word_id;  // id of the pun word's <word> element
  std::string text;     // words joined by single spaces
  PunPair pair;
};

struct SemevalParse {
  std::vector<PunEntry> entries;
  std::size_t skipped = 0;
  std::vector<std::string> skip_reasons;  // one line per skipped gold record
};

/// `text_xml`: the <corpus><text id><word id>..</word></text></corpus> file.
/// `gold`: `word_id TAB pun_sense_keys TAB alt_sense_keys [TAB alt_word]`, key
/// lists separated by ';'. Gold rows whose text or glosses cannot be
/// resolved are skipped and counted; malformed rows throw Error(kParse)
/// carrying the record index.
SemevalParse parse_semeval(std::string_view text_xml, std::string_view gold,
                           const GlossTable& glosses);

/// The lemma part of a WordNet sense key ("stair%1:06:00::" -> "stair").
std::string sense_key_lemma(std::string_view sense_key);

// ---------------------------------------------------------------------------
// CUP compatibility records

/// Column order of the on-disk format.
inline constexpr std::array<std::string_view, 9> kCupColumns = {
    "context_keywords", "pun_word", "alt_word", "pun_gloss", "alt_gloss",
    "label",            "human_pun", "difficulty", "split"};

struct CupCounts {
  std::size_t total = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
  std::size_t unsplit = 0;

  bool operator==(const CupCounts&) const = default;
};

/// Published size of the CUP release: 4,551 rows, 2,753 compatible.
inline constexpr CupCounts kPublishedCupCounts{4551, 2753, 1798, 3155, 465, 931, 0};

CupCounts count_records(const std::vector<CompatibilityRecord>& records);

struct CupDataset {
  std::vector<CompatibilityRecord> records;
  CupCounts counts;
};

/// Tab-separated, one record per line, header row required. Text fields use
/// backslash escapes (\t \n \r \\); empty optional fields mean absent;
/// keywords are joined with '|'. Invariant violations throw
/// Error(kValidation) with the 1-based line number and field name.
CupDataset load_cup(const std::filesystem::path& path);
CupDataset parse_cup(std::istream& in);

/// Canonical serialisation; parse_cup(write_cup(x)) == x.
void write_cup(std::ostream& out, const std::vector<CompatibilityRecord>& records);

std::string escape_field(std::string_view text);
std::string unescape_field(std::string_view text, std::size_t line, const char* field);

// ---------------------------------------------------------------------------
// Pair catalog

/// Fixed set of candidate pun pairs, in first-occurrence order.
class PairCatalog {
 public:
  PairCatalog() = default;

  /// Adds a pair unless an identical (words + glosses) entry exists.
  /// Returns the index of the stored entry.
  std::size_t add(const PunPair& pair);

  const std::vector<PunPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const PunPair& at(std::size_t index) const { return pairs_.at(index); }

  /// First entry with these words.
  std::optional<std::size_t> find(std::string_view pun_word, std::string_view alt_word) const;

  /// Number of (pun_word, alt_word) keys seen with more than one gloss pair.
  std::size_t gloss_conflicts() const { return gloss_conflicts_; }

 private:
  std::vector<PunPair> pairs_;
  std::map<std::pair<std::string, std::string>, std::size_t> id_index_;
  std::size_t gloss_conflicts_ = 0;
};

PairCatalog build_pair_catalog(const std::vector<CompatibilityRecord>& records);
PairCatalog build_pair_catalog(const std::vector<PunPair>& pairs);

/// Lexicon file: `pun_word TAB alt_word TAB pun_gloss TAB alt_gloss
/// [TAB pun_sense_key TAB alt_sense_key]`, optional header line.
std::vector<PunPair> load_pair_lexicon(const std::filesystem::path& path);
std::vector<PunPair> parse_pair_lexicon(std::istream& in);
void write_pair_lexicon(std::ostream& out, const PairCatalog& catalog);

/// The `limit` most frequent (pun_word, alt_word) pairs among SemEval
/// entries; ties and glosses follow first occurrence.
std::vector<PunPair> most_frequent_pairs(const std::vector<PunEntry>& entries,
                                         std::size_t limit = 500);

// ---------------------------------------------------------------------------
// Splits

struct SplitRatios {
  double train = 0.7;
  double dev = 0.1;
  double test = 0.2;
};

/// Largest-remainder rounding of `total * ratio` per split.
std::array<std::size_t, 3> split_sizes(std::size_t total, const SplitRatios& ratios);

/// Assigns splits by a seeded shuffle. Refuses records that already carry a
/// split unless `force` is set.
std::vector<CompatibilityRecord> split_dataset(std::vector<CompatibilityRecord> records,
                                               const SplitRatios& ratios, std::uint64_t seed,
                                               bool force = false);

}  // namespace cspun
