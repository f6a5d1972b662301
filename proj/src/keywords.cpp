#include "cspun/keywords.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <unordered_map>

#include "cspun/error.hpp"
#include "cspun/text.hpp"

namespace cspun {

StopwordList StopwordList::smart() {
  std::unordered_set<std::string> words;
  for (const auto w : smart_stopwords()) words.emplace(w);
  return StopwordList(std::move(words));
}

StopwordList StopwordList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open stopword file " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    words.insert(to_lower(t));
  }
  if (words.empty())
    throw Error(ErrorKind::kValidation, "stopword file is empty: " + path.string());
  return StopwordList(std::move(words));
}

std::string ScoredPhrase::text() const { return join(tokens, " "); }

namespace {

bool is_numeric(std::string_view token) {
  return !token.empty() && std::all_of(token.begin(), token.end(), [](char c) {
    return (c >= '0' && c <= '9') || c == '.' || c == ',';
  });
}

}  // namespace

std::vector<ScoredPhrase> rake_extract(std::string_view text, const StopwordList& stopwords,
                                       const RakeOptions& options) {
  // Candidate runs, in order of appearance.
  std::vector<std::vector<std::string>> candidates;
  std::vector<std::string> run;
  const auto close_run = [&] {
    if (!run.empty() && run.size() <= options.max_phrase_len) candidates.push_back(run);
    run.clear();
  };
  for (const auto& token : tokenize(text)) {
    if (token.boundary_before) close_run();
    if (stopwords.contains(token.text) || is_numeric(token.text)) {
      close_run();
      continue;
    }
    run.push_back(token.text);
  }
  close_run();

  std::unordered_map<std::string, double> degree;
  std::unordered_map<std::string, double> frequency;
  for (const auto& phrase : candidates) {
    for (const auto& word : phrase) {
      frequency[word] += 1.0;
      degree[word] += static_cast<double>(phrase.size());
    }
  }

  std::vector<ScoredPhrase> phrases;
  std::unordered_set<std::string> seen;
  for (const auto& phrase : candidates) {
    if (!seen.insert(join(phrase, " ")).second) continue;
    ScoredPhrase scored{phrase, 0.0};
    for (const auto& word : phrase) scored.score += degree[word] / frequency[word];
    phrases.push_back(std::move(scored));
  }
  std::stable_sort(phrases.begin(), phrases.end(),
                   [](const ScoredPhrase& a, const ScoredPhrase& b) { return a.score > b.score; });
  return phrases;
}

std::optional<CoarseTag> parse_tag(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "noun" || t == "n") return CoarseTag::kNoun;
  if (t == "verb" || t == "v") return CoarseTag::kVerb;
  if (t == "adj" || t == "a" || t == "s") return CoarseTag::kAdj;
  if (t == "adv" || t == "r") return CoarseTag::kAdv;
  if (t == "other") return CoarseTag::kOther;
  return std::nullopt;
}

void PosLexicon::add(std::string lemma, CoarseTag tag) {
  tags_[std::move(lemma)] |= static_cast<unsigned>(tag);
}

std::optional<unsigned> PosLexicon::tags(std::string_view lemma) const {
  if (auto it = tags_.find(lemma); it != tags_.end()) return it->second;
  return std::nullopt;
}

PosLexicon PosLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open POS lexicon " + path.string());
  PosLexicon lexicon;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 2)
      throw Error(ErrorKind::kParse, "expected 'lemma<TAB>tags'", line_no);
    const auto lemma = to_lower(trim(cols[0]));
    if (lemma.empty()) throw Error(ErrorKind::kParse, "empty lemma", line_no, "lemma");
    bool any = false;
    for (const auto& tag_text : split(cols[1], ',')) {
      if (trim(tag_text).empty()) continue;
      const auto tag = parse_tag(tag_text);
      if (!tag)
        throw Error(ErrorKind::kParse, "unknown tag '" + tag_text + "'", line_no, "tags");
      lexicon.add(lemma, *tag);
      any = true;
    }
    if (!any) throw Error(ErrorKind::kValidation, "lemma has no tags", line_no, "tags");
  }
  return lexicon;
}

void PosLexicon::save(std::ostream& out) const {
  static constexpr std::pair<CoarseTag, const char*> kNames[] = {
      {CoarseTag::kNoun, "noun"}, {CoarseTag::kVerb, "verb"}, {CoarseTag::kAdj, "adj"},
      {CoarseTag::kAdv, "adv"},   {CoarseTag::kOther, "other"}};
  for (const auto& [lemma, mask] : tags_) {
    out << lemma << '\t';
    bool first = true;
    for (const auto& [tag, name] : kNames) {
      if (mask & static_cast<unsigned>(tag)) {
        out << (first ? "" : ",") << name;
        first = false;
      }
    }
    out << '\n';
  }
}

std::vector<ScoredPhrase> pos_filter(const std::vector<ScoredPhrase>& phrases,
                                     const PosLexicon& lexicon) {
  constexpr unsigned kContent =
      static_cast<unsigned>(CoarseTag::kNoun) | static_cast<unsigned>(CoarseTag::kVerb);
  std::vector<ScoredPhrase> kept;
  for (const auto& phrase : phrases) {
    if (phrase.tokens.empty()) continue;
    const auto& head = phrase.tokens.back();
    auto tags = lexicon.tags(lemmatize(head));
    if (!tags) tags = lexicon.tags(head);
    if (!tags || (*tags & kContent)) kept.push_back(phrase);
  }
  return kept;
}

bool mentions_lemma(std::string_view phrase, const std::set<std::string>& excluded_lemmas) {
  if (excluded_lemmas.empty()) return false;
  for (const auto& w : words(phrase)) {
    if (excluded_lemmas.contains(lemmatize(w))) return true;
  }
  return false;
}

ContextSpec finish_context(const std::vector<std::string>& phrases,
                           const std::set<std::string>& excluded_lemmas,
                           std::size_t max_keywords,
                           std::optional<std::string> source_sentence) {
  std::vector<std::string> kept;
  std::set<std::string> seen;
  for (const auto& raw : phrases) {
    // Normalise the same way ContextSpec does so dedup sees one form.
    const auto phrase = join(words(raw), " ");
    if (phrase.empty() || mentions_lemma(phrase, excluded_lemmas)) continue;
    if (!seen.insert(phrase).second) continue;
    kept.push_back(phrase);
    if (kept.size() == max_keywords) break;
  }
  if (kept.empty()) throw Error(ErrorKind::kEmptyContext, "empty context");
  return ContextSpec::make(kept, std::move(source_sentence));
}

namespace {

std::set<std::string> excluded_for(const std::optional<PunPair>& exclude) {
  std::set<std::string> lemmas;
  if (exclude) {
    lemmas.insert(lemmatize(exclude->pun_word));
    lemmas.insert(lemmatize(exclude->alt_word));
  }
  return lemmas;
}

}  // namespace

ContextSpec build_context(std::string_view text, const std::optional<PunPair>& exclude,
                          const StopwordList& stopwords, const PosLexicon& lexicon,
                          const KeywordOptions& options) {
  std::vector<std::string> phrases;
  for (const auto& p : pos_filter(rake_extract(text, stopwords, options.rake), lexicon))
    phrases.push_back(p.text());
  return finish_context(phrases, excluded_for(exclude), options.max_keywords,
                        std::string(text));
}

ContextSpec build_context(const std::vector<std::string>& keywords,
                          const std::optional<PunPair>& exclude,
                          const KeywordOptions& options) {
  return finish_context(keywords, excluded_for(exclude), options.max_keywords);
}

}  // namespace cspun
