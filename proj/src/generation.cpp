#include "cspun/generation.hpp"

#include <spdlog/spdlog.h>

#include <set>

#include "cspun/error.hpp"
#include "cspun/text.hpp"
#include "json.hpp"

namespace cspun {

const char* to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::kPunFinetune: return "pun_finetune";
    case PromptKind::kPretrain: return "pretrain";
    case PromptKind::kAmbipun: return "ambipun";
  }
  return "pun_finetune";
}

void DecodeParams::validate() const {
  if (beam_size < 1)
    throw Error(ErrorKind::kValidation, "beam_size must be >= 1", std::nullopt, "beam_size");
  if (max_target_len < 1)
    throw Error(ErrorKind::kValidation, "max_target_len must be >= 1", std::nullopt,
                "max_target_len");
}

PromptRecord build_pun_prompt(const ContextSpec& context, const PunPair& pair) {
  std::string prompt = "generate a pun that situates in ";
  prompt += context.joined(", ");
  prompt += ", using the word " + pair.pun_word + ", " + pair.pun_word + " means " +
            pair.pun_gloss + " and " + pair.alt_word + " means " + pair.alt_gloss;
  return {std::move(prompt), std::nullopt, PromptKind::kPunFinetune, {}};
}

PromptRecord build_ambipun_prompt(const ContextSpec& context, const PunPair& pair) {
  std::string prompt = "generate sentence: " + context.joined(", ") + ", " + pair.pun_word;
  if (pair.kind() == PairKind::kHomographic) prompt += ", " + pair.alt_word;
  return {std::move(prompt), std::nullopt, PromptKind::kAmbipun, {}};
}

PromptRecord build_pretrain_prompt(const ContextSpec& context, std::string_view word,
                                   std::string_view gloss, std::string target) {
  const std::string w(word);
  const std::string g(gloss);
  std::string prompt = "generate a sentence that situates in " + context.joined(", ") +
                       ", using the word " + w + ", " + w + " means " + g + " and " + w +
                       " means " + g;
  return {std::move(prompt), std::move(target), PromptKind::kPretrain, w};
}

MiningResult mine_pretrain_corpus(std::istream& sentences, const PairCatalog& catalog,
                                  const StopwordList& stopwords, const PosLexicon& lexicon,
                                  const MiningOptions& options) {
  struct Target {
    std::string word;
    std::string lemma;
    std::string gloss;
    std::size_t found = 0;
  };
  // Words of heterographic pairs in catalog order; the first gloss wins.
  std::vector<Target> targets;
  std::set<std::string> seen;
  for (const auto& pair : catalog.pairs()) {
    if (pair.kind() != PairKind::kHeterographic) continue;
    for (const auto& [w, g] : {std::pair{pair.pun_word, pair.pun_gloss},
                               std::pair{pair.alt_word, pair.alt_gloss}}) {
      if (seen.insert(w).second) targets.push_back({w, lemmatize(w), g, 0});
    }
  }

  MiningResult result;
  std::size_t open = targets.size();
  std::string line;
  while (open > 0 && std::getline(sentences, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++result.sentences_read;
    const auto tokens = words(line);
    if (tokens.size() < options.min_tokens || tokens.size() > options.max_tokens) continue;
    std::set<std::string> lemmas;
    for (const auto& t : tokens) lemmas.insert(lemmatize(t));

    std::optional<std::vector<ScoredPhrase>> phrases;  // computed on first match
    for (auto& target : targets) {
      if (target.found >= options.per_word || !lemmas.contains(target.lemma)) continue;
      if (!phrases) phrases = pos_filter(rake_extract(line, stopwords, options.keywords.rake), lexicon);
      std::vector<std::string> texts;
      for (const auto& p : *phrases) texts.push_back(p.text());
      try {
        const auto context =
            finish_context(texts, {target.lemma}, options.keywords.max_keywords, line);
        result.records.push_back(build_pretrain_prompt(context, target.word, target.gloss, line));
        if (++target.found == options.per_word) --open;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kEmptyContext) throw;
      }
    }
  }
  for (const auto& target : targets) {
    if (target.found < options.per_word)
      result.shortfall[target.word] = options.per_word - target.found;
  }
  if (!result.shortfall.empty())
    spdlog::info("mining: {} of {} words found fewer than {} sentences", result.shortfall.size(),
                 targets.size(), options.per_word);
  return result;
}

void write_prompt_records(std::ostream& out, const std::vector<PromptRecord>& records) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(r.kind);
    j["prompt"] = r.prompt;
    if (r.target) j["target"] = *r.target;
    if (!r.word.empty()) j["word"] = r.word;
    out << j.dump() << '\n';
  }
}

std::string generation_id(const ContextSpec& context, const PunPair& pair,
                          std::string_view prompt, std::string_view backend_id) {
  std::string key = context.joined("|");
  key += '\x1f' + pair.pun_word + '\x1f' + pair.alt_word + '\x1f';
  key += prompt;
  key += '\x1f';
  key += backend_id;
  return "g" + hex64(fnv1a64(key)).substr(0, 12);
}

GenerationRecord generate(GeneratorClient& backend, const ContextSpec& context,
                          const PunPair& pair, const PromptRecord& prompt,
                          const DecodeParams& decode, const RetryPolicy& retry) {
  decode.validate();
  GenerationRequest request{prompt.prompt, decode.beam_size, decode.max_target_len, &context,
                            &pair};
  auto text = with_retries(retry, [&] { return backend.generate(request); });
  if (trim(text).empty()) throw Error(ErrorKind::kBackend, "empty generation");
  GenerationRecord record;
  record.backend_id = backend.id();
  record.generation_id = generation_id(context, pair, prompt.prompt, record.backend_id);
  record.context = context;
  record.pair = pair;
  record.prompt = prompt.prompt;
  record.text = std::move(text);
  record.decode = decode;
  return record;
}

}  // namespace cspun
