#include "cspun/types.hpp"

#include <algorithm>
#include "json.hpp"
#include <set>

#include "cspun/error.hpp"
#include "cspun/text.hpp"

namespace cspun {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kNotFound: return "not_found";
    case ErrorKind::kConflict: return "conflict";
    case ErrorKind::kTransport: return "transport";
    case ErrorKind::kBackend: return "backend";
    case ErrorKind::kEmptyContext: return "empty_context";
    case ErrorKind::kInvalidArgument: return "invalid_argument";
  }
  return "unknown";
}

namespace {

std::string describe(const std::string& message, const std::optional<std::size_t>& line,
                     const std::optional<std::string>& field) {
  std::string out;
  if (line) out += "line " + std::to_string(*line) + ": ";
  if (field) out += "field '" + *field + "': ";
  return out + message;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line,
             std::optional<std::string> field)
    : std::runtime_error(describe(message, line, field)),
      kind_(kind),
      message_(message),
      line_(line),
      field_(std::move(field)) {}

std::string Error::to_json_line() const {
  nlohmann::ordered_json j;
  j["error"] = to_string(kind_);
  j["message"] = message_;
  if (line_) j["line"] = *line_;
  if (field_) j["field"] = *field_;
  return j.dump();
}

const char* to_string(PairKind kind) {
  return kind == PairKind::kHomographic ? "homographic" : "heterographic";
}

PunPair PunPair::make(std::string_view pun_word, std::string_view alt_word,
                      std::string pun_gloss, std::string alt_gloss,
                      std::optional<std::string> pun_sense_key,
                      std::optional<std::string> alt_sense_key) {
  PunPair pair;
  pair.pun_word = to_lower(trim(pun_word));
  pair.alt_word = to_lower(trim(alt_word));
  pair.pun_gloss = std::string(trim(pun_gloss));
  pair.alt_gloss = std::string(trim(alt_gloss));
  pair.pun_sense_key = std::move(pun_sense_key);
  pair.alt_sense_key = std::move(alt_sense_key);

  const auto check_word = [](const std::string& word, const char* field) {
    if (word.empty()) throw Error(ErrorKind::kValidation, "empty word", std::nullopt, field);
    if (has_whitespace(word))
      throw Error(ErrorKind::kValidation, "word contains whitespace: '" + word + "'",
                  std::nullopt, field);
  };
  check_word(pair.pun_word, "pun_word");
  check_word(pair.alt_word, "alt_word");
  if (pair.pun_gloss.empty())
    throw Error(ErrorKind::kValidation, "empty gloss", std::nullopt, "pun_gloss");
  if (pair.alt_gloss.empty())
    throw Error(ErrorKind::kValidation, "empty gloss", std::nullopt, "alt_gloss");
  return pair;
}

ContextSpec ContextSpec::make(const std::vector<std::string>& keywords,
                              std::optional<std::string> source_sentence) {
  ContextSpec spec;
  spec.source_sentence = std::move(source_sentence);
  std::set<std::string> seen;
  for (const auto& raw : keywords) {
    // Collapse runs of whitespace so "construction   workers" has one form.
    std::vector<std::string> tokens;
    for (auto& part : split(to_lower(trim(raw)), ' ')) {
      auto t = std::string(trim(part));
      if (!t.empty()) tokens.push_back(std::move(t));
    }
    if (tokens.empty())
      throw Error(ErrorKind::kValidation, "empty keyword", std::nullopt, "keywords");
    if (tokens.size() > kMaxPhraseTokens)
      throw Error(ErrorKind::kValidation,
                  "keyword phrase has more than " + std::to_string(kMaxPhraseTokens) +
                      " tokens: '" + std::string(raw) + "'",
                  std::nullopt, "keywords");
    auto phrase = join(tokens, " ");
    if (!seen.insert(phrase).second)
      throw Error(ErrorKind::kValidation, "duplicate keyword '" + phrase + "'", std::nullopt,
                  "keywords");
    spec.keywords.push_back(std::move(phrase));
  }
  if (spec.keywords.empty())
    throw Error(ErrorKind::kValidation, "context has no keywords", std::nullopt, "keywords");
  if (spec.keywords.size() > kMaxKeywords)
    throw Error(ErrorKind::kValidation,
                "context has more than " + std::to_string(kMaxKeywords) + " keywords",
                std::nullopt, "keywords");
  return spec;
}

ContextSpec ContextSpec::parse(std::string_view joined) {
  const char sep = joined.find('|') != std::string_view::npos ? '|' : ',';
  std::vector<std::string> parts;
  for (auto& part : split(joined, sep)) {
    if (!trim(part).empty()) parts.push_back(std::move(part));
  }
  return make(parts);
}

std::string ContextSpec::joined(std::string_view sep) const { return join(keywords, sep); }

std::string ContextSpec::key() const {
  auto sorted = keywords;
  std::sort(sorted.begin(), sorted.end());
  return join(sorted, "|");
}

const char* to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view text) {
  const auto lower = to_lower(trim(text));
  if (lower == "train") return Split::kTrain;
  if (lower == "dev" || lower == "valid" || lower == "validation") return Split::kDev;
  if (lower == "test") return Split::kTest;
  return std::nullopt;
}

}  // namespace cspun
