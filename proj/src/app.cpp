#include "cspun/app.hpp"

#include <spdlog/spdlog.h>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "cspun/error.hpp"
#include "cspun/text.hpp"

namespace cspun {

namespace fs = std::filesystem;

const char* to_string(PromptStyle style) {
  return style == PromptStyle::kAmbipun ? "ambipun" : "pun";
}

PromptStyle parse_prompt_style(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "pun") return PromptStyle::kPun;
  if (t == "ambipun") return PromptStyle::kAmbipun;
  throw Error(ErrorKind::kInvalidArgument, "unknown prompt style '" + std::string(text) + "'",
              std::nullopt, "prompt_style");
}

// ---------------------------------------------------------------------------
// AppConfig

namespace {

template <typename T>
T parse_number(std::string_view value, std::optional<std::size_t> line, std::string_view key) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw Error(ErrorKind::kValidation, "not a number: '" + std::string(value) + "'", line,
                std::string(key));
  return out;
}

std::optional<fs::path> resolve(std::string_view value, const fs::path& base_dir) {
  if (value.empty()) return std::nullopt;
  fs::path p(value);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p.lexically_normal();
}

std::string path_text(const std::optional<fs::path>& p) { return p ? p->string() : ""; }

}  // namespace

AppConfig AppConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open config " + path.string());
  return parse(in, path.parent_path());
}

AppConfig AppConfig::parse(std::istream& in, const fs::path& base_dir) {
  AppConfig config;
  std::set<std::string> seen;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::kParse, "expected 'key = value'", number);
    const std::string key(trim(text.substr(0, eq)));
    if (!seen.insert(key).second)
      throw Error(ErrorKind::kParse, "key given twice", number, key);
    config.set(key, trim(text.substr(eq + 1)), number, base_dir);
  }
  return config;
}

void AppConfig::set(std::string_view key, std::string_view value,
                    std::optional<std::size_t> line, const fs::path& base_dir) {
  const std::string k(key);
  try {
    if (k == "cup_file") cup_file = resolve(value, base_dir);
    else if (k == "pair_lexicon") pair_lexicon = resolve(value, base_dir);
    else if (k == "embeddings") embeddings = resolve(value, base_dir);
    else if (k == "stopwords") stopwords = resolve(value, base_dir);
    else if (k == "pos_lexicon") pos_lexicon = resolve(value, base_dir);
    else if (k == "gloss_table") gloss_table = resolve(value, base_dir);
    else if (k == "feedback_log") feedback_log = resolve(value, base_dir);
    else if (k == "ui_dir") ui_dir = resolve(value, base_dir);
    else if (k == "classifier_endpoint") classifier_endpoint = std::string(value);
    else if (k == "generator_endpoint") generator_endpoint = std::string(value);
    else if (k == "retrieval_method") retrieval_method = parse_retrieval_method(value);
    else if (k == "prompt_style") prompt_style = parse_prompt_style(value);
    else if (k == "k") this->k = parse_number<std::size_t>(value, line, k);
    else if (k == "beam_size") decode.beam_size = parse_number<int>(value, line, k);
    else if (k == "max_target_len") decode.max_target_len = parse_number<int>(value, line, k);
    else if (k == "bind_host") bind_host = std::string(value);
    else if (k == "bind_port") bind_port = parse_number<int>(value, line, k);
    else if (k == "seed") seed = parse_number<std::uint64_t>(value, line, k);
    else throw Error(ErrorKind::kParse, "unknown config key", line, k);
  } catch (const Error& e) {
    if (e.line() || !line) throw;
    throw Error(e.kind(), e.message(), line, k);
  }
}

void AppConfig::validate() const {
  const auto must_exist = [](const std::optional<fs::path>& p, const char* key) {
    if (p && !fs::exists(*p))
      throw Error(ErrorKind::kValidation, "path does not exist: " + p->string(), std::nullopt, key);
  };
  must_exist(cup_file, "cup_file");
  must_exist(pair_lexicon, "pair_lexicon");
  must_exist(embeddings, "embeddings");
  must_exist(stopwords, "stopwords");
  must_exist(pos_lexicon, "pos_lexicon");
  must_exist(gloss_table, "gloss_table");
  must_exist(ui_dir, "ui_dir");
  if (feedback_log) {
    const auto dir = feedback_log->parent_path();
    if (!dir.empty() && !fs::is_directory(dir))
      throw Error(ErrorKind::kValidation, "directory does not exist: " + dir.string(),
                  std::nullopt, "feedback_log");
  }
  if (k < 1) throw Error(ErrorKind::kValidation, "k must be at least 1", std::nullopt, "k");
  if (bind_port < 0 || bind_port > 65535)
    throw Error(ErrorKind::kValidation, "port out of range", std::nullopt, "bind_port");
  decode.validate();
}

std::string AppConfig::canonical() const {
  std::map<std::string, std::string> values{
      {"cup_file", path_text(cup_file)},
      {"pair_lexicon", path_text(pair_lexicon)},
      {"embeddings", path_text(embeddings)},
      {"stopwords", path_text(stopwords)},
      {"pos_lexicon", path_text(pos_lexicon)},
      {"gloss_table", path_text(gloss_table)},
      {"feedback_log", path_text(feedback_log)},
      {"ui_dir", path_text(ui_dir)},
      {"classifier_endpoint", classifier_endpoint},
      {"generator_endpoint", generator_endpoint},
      {"retrieval_method", to_string(retrieval_method)},
      {"prompt_style", to_string(prompt_style)},
      {"k", std::to_string(k)},
      {"beam_size", std::to_string(decode.beam_size)},
      {"max_target_len", std::to_string(decode.max_target_len)},
      {"bind_host", bind_host},
      {"bind_port", std::to_string(bind_port)},
      {"seed", std::to_string(seed)},
  };
  std::string out;
  for (const auto& [key, value] : values) out += key + " = " + value + "\n";
  return out;
}

std::string AppConfig::hash() const { return hex64(fnv1a64(canonical())); }

// ---------------------------------------------------------------------------
// Resources

namespace {

void add_tokens(std::unordered_set<std::string>& vocab, std::string_view phrase) {
  std::string token;
  const auto flush = [&] {
    if (!token.empty()) vocab.insert(to_lower(token));
    token.clear();
  };
  for (const char c : phrase) {
    if (c == ' ' || c == '_' || c == '-') {
      flush();
    } else {
      token += c;
    }
  }
  flush();
  // embed_phrase looks up hyphenated tokens whole before splitting them.
  for (const auto& piece : split(phrase, ' ')) {
    if (!piece.empty()) vocab.insert(to_lower(piece));
  }
}

}  // namespace

std::unordered_set<std::string> embedding_vocabulary(
    const PairCatalog& catalog, const std::vector<CompatibilityRecord>& records) {
  std::unordered_set<std::string> vocab;
  for (const auto& pair : catalog.pairs()) {
    add_tokens(vocab, pair.pun_word);
    add_tokens(vocab, pair.alt_word);
  }
  for (const auto& r : records) {
    for (const auto& kw : r.context.keywords) add_tokens(vocab, kw);
  }
  return vocab;
}

Resources load_resources(const AppConfig& config, const ResourceOptions& options) {
  config.validate();
  Resources res;
  if (config.cup_file) res.cup = load_cup(*config.cup_file);
  if (config.pair_lexicon) {
    res.catalog = build_pair_catalog(load_pair_lexicon(*config.pair_lexicon));
  } else if (res.cup) {
    res.catalog = build_pair_catalog(res.cup->records);
  }
  res.stopwords = config.stopwords ? StopwordList::load(*config.stopwords) : StopwordList::smart();
  if (config.pos_lexicon) res.lexicon = PosLexicon::load(*config.pos_lexicon);
  if (config.embeddings && options.load_embeddings) {
    EmbeddingLoadOptions load_options;
    if (options.restrict_embeddings)
      load_options.keep = embedding_vocabulary(
          res.catalog, res.cup ? res.cup->records : std::vector<CompatibilityRecord>{});
    EmbeddingLoadReport report;
    res.embeddings = load_embeddings(*config.embeddings, load_options, &report);
    spdlog::info("embeddings: {} lines, {} stored, dim {}, {} rejected", report.lines,
                 report.stored, res.embeddings->dim(), report.rejected);
  }
  spdlog::info("catalog: {} pairs", res.catalog.size());
  return res;
}

// ---------------------------------------------------------------------------
// Batch pipeline

PromptRecord build_prompt(PromptStyle style, const ContextSpec& context, const PunPair& pair) {
  return style == PromptStyle::kAmbipun ? build_ambipun_prompt(context, pair)
                                        : build_pun_prompt(context, pair);
}

std::vector<GenerationRecord> run_batch(const std::vector<ContextSpec>& contexts,
                                        const PairCatalog& catalog, const EmbeddingTable& table,
                                        GeneratorClient& generator, const BatchOptions& options) {
  std::vector<GenerationRecord> records;
  for (const auto& context : contexts) {
    for (const auto& scored : rank_unsupervised(context, catalog, table, options.k)) {
      const auto prompt = build_prompt(options.style, context, scored.pair);
      records.push_back(
          generate(generator, context, scored.pair, prompt, options.decode, options.retry));
    }
  }
  return records;
}

std::vector<ContextSpec> distinct_contexts(const std::vector<CompatibilityRecord>& records,
                                           std::optional<Split> split) {
  std::vector<ContextSpec> contexts;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (split && r.split != split) continue;
    if (seen.insert(r.context.key()).second) contexts.push_back(r.context);
  }
  return contexts;
}

TpResult evaluate_unsupervised_tp(const std::vector<CompatibilityRecord>& records,
                                  const PairCatalog& catalog, const EmbeddingTable& table,
                                  std::size_t n, std::optional<Split> split) {
  const auto contexts = distinct_contexts(records, split);
  if (contexts.empty()) throw Error(ErrorKind::kInvalidArgument, "no contexts in the requested split");
  std::vector<ContextRetrieval> retrievals;
  retrievals.reserve(contexts.size());
  for (const auto& c : contexts) retrievals.push_back({c, rank_unsupervised(c, catalog, table, n)});
  return tp_at_n(retrievals, GoldLabels(records), n);
}

// ---------------------------------------------------------------------------
// GenerationRecord I/O

nlohmann::ordered_json to_json(const GenerationRecord& r) {
  nlohmann::ordered_json j;
  j["generation_id"] = r.generation_id;
  j["context"] = r.context.keywords;
  j["pun_word"] = r.pair.pun_word;
  j["alt_word"] = r.pair.alt_word;
  j["pun_gloss"] = r.pair.pun_gloss;
  j["alt_gloss"] = r.pair.alt_gloss;
  j["prompt"] = r.prompt;
  j["text"] = r.text;
  j["backend_id"] = r.backend_id;
  j["decode"] = {{"beam_size", r.decode.beam_size},
                 {"max_target_len", r.decode.max_target_len},
                 {"stop", r.decode.stop}};
  return j;
}

GenerationRecord generation_record_from_json(const nlohmann::json& j) {
  const auto field = [&](const char* name) -> const nlohmann::json& {
    if (!j.contains(name))
      throw Error(ErrorKind::kValidation, "missing field", std::nullopt, name);
    return j.at(name);
  };
  try {
    GenerationRecord r;
    r.generation_id = field("generation_id").get<std::string>();
    r.context = ContextSpec::make(field("context").get<std::vector<std::string>>());
    r.pair = PunPair::make(field("pun_word").get<std::string>(), field("alt_word").get<std::string>(),
                           field("pun_gloss").get<std::string>(),
                           field("alt_gloss").get<std::string>());
    r.prompt = field("prompt").get<std::string>();
    r.text = field("text").get<std::string>();
    r.backend_id = field("backend_id").get<std::string>();
    if (j.contains("decode")) {
      const auto& d = j.at("decode");
      r.decode.beam_size = d.value("beam_size", r.decode.beam_size);
      r.decode.max_target_len = d.value("max_target_len", r.decode.max_target_len);
      r.decode.stop = d.value("stop", r.decode.stop);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kValidation, std::string("bad generation record: ") + e.what());
  }
}

void write_generation_records(std::ostream& out, const std::vector<GenerationRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<GenerationRecord> read_generation_records(std::istream& in) {
  std::vector<GenerationRecord> records;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    try {
      records.push_back(generation_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kParse, e.what(), number);
    } catch (const Error& e) {
      throw Error(e.kind(), e.message(), number, e.field());
    }
  }
  return records;
}

}  // namespace cspun
