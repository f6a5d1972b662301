#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cspun/backend.hpp"
#include "cspun/corpus.hpp"
#include "cspun/keywords.hpp"
#include "cspun/types.hpp"

namespace cspun {

enum class PromptKind { kPunFinetune, kPretrain, kAmbipun };

const char* to_string(PromptKind kind);

struct PromptRecord {
  std::string prompt;
  std::optional<std::string> target;
  PromptKind kind = PromptKind::kPunFinetune;
  std::string word;  // mined word, pretraining records only

  bool operator==(const PromptRecord&) const = default;
};

/// Beam search with a beam of 2 and at most 256 target tokens; decoding
/// stops at end-of-sequence.
struct DecodeParams {
  int beam_size = 2;
  int max_target_len = 256;
  std::string stop = "eos";

  void validate() const;
  bool operator==(const DecodeParams&) const = default;
};

struct GenerationRecord {
  std::string generation_id;
  ContextSpec context;
  PunPair pair;
  std::string prompt;
  std::string text;
  std::string backend_id;
  DecodeParams decode;
};

/// "generate a pun that situates in {C}, using the word {p}, {p} means {Sp}
/// and {a} means {Sa}"
PromptRecord build_pun_prompt(const ContextSpec& context, const PunPair& pair);

/// "generate sentence: {C}, {p}, {a}" for homographic pairs,
/// "generate sentence: {C}, {p}" for heterographic ones.
PromptRecord build_ambipun_prompt(const ContextSpec& context, const PunPair& pair);

/// "generate a sentence that situates in {C}, using the word {w}, {w} means
/// {S} and {w} means {S}" with the mined sentence as target.
PromptRecord build_pretrain_prompt(const ContextSpec& context, std::string_view word,
                                   std::string_view gloss, std::string target);

struct MiningOptions {
  std::size_t per_word = 200;
  std::size_t min_tokens = 5;
  std::size_t max_tokens = 40;
  KeywordOptions keywords;
};

struct MiningResult {
  std::vector<PromptRecord> records;
  /// Words that ended with fewer than per_word matches -> missing count.
  std::map<std::string, std::size_t> shortfall;
  std::size_t sentences_read = 0;
};

/// Streams one sentence per line and emits pretraining prompts for the
/// words of heterographic catalog pairs. A sentence matches word w when
/// its lemma set contains lemmatize(w); the context is RAKE + POS filter
/// with w excluded, and sentences whose context would be empty are skipped.
MiningResult mine_pretrain_corpus(std::istream& sentences, const PairCatalog& catalog,
                                  const StopwordList& stopwords, const PosLexicon& lexicon,
                                  const MiningOptions& options = {});

/// Line-delimited JSON: {"kind","prompt","target","word"}.
void write_prompt_records(std::ostream& out, const std::vector<PromptRecord>& records);

/// Stable id from context, pair, prompt and backend.
std::string generation_id(const ContextSpec& context, const PunPair& pair,
                          std::string_view prompt, std::string_view backend_id);

/// Calls the backend (retrying transport failures) and records provenance.
/// Throws Error(kBackend, "empty generation") when the text is empty.
GenerationRecord generate(GeneratorClient& backend, const ContextSpec& context,
                          const PunPair& pair, const PromptRecord& prompt,
                          const DecodeParams& decode = {}, const RetryPolicy& retry = {});

}  // namespace cspun
