#include "cspun/service.hpp"

#include <spdlog/spdlog.h>

#include <fstream>

#include "cspun/error.hpp"
#include "httplib.h"

namespace cspun {

using nlohmann::json;
using nlohmann::ordered_json;

struct Service::Impl {
  httplib::Server server;
};

namespace {

// Carries the HTTP status for failures that are not library errors.
struct HttpFailure {
  int status;
  std::string error;
  std::string message;
  std::optional<std::string> field;
  std::optional<std::string> backend;
};

[[noreturn]] void bad_field(const std::string& field, const std::string& message) {
  throw HttpFailure{400, "validation", message, field, std::nullopt};
}

[[noreturn]] void unavailable(const std::string& backend, const std::string& message) {
  throw HttpFailure{503, "backend_unavailable", message, std::nullopt, backend};
}

ContextSpec keywords_field(const json& body) {
  if (!body.contains("keywords")) bad_field("keywords", "missing");
  const auto& kw = body.at("keywords");
  std::vector<std::string> keywords;
  if (kw.is_string()) {
    try {
      return ContextSpec::parse(kw.get<std::string>());
    } catch (const Error& e) {
      bad_field("keywords", e.message());
    }
  }
  if (!kw.is_array()) bad_field("keywords", "expected an array of strings");
  for (const auto& item : kw) {
    if (!item.is_string()) bad_field("keywords", "expected an array of strings");
    keywords.push_back(item.get<std::string>());
  }
  try {
    return ContextSpec::make(keywords);
  } catch (const Error& e) {
    bad_field("keywords", e.message());
  }
}

std::size_t positive_field(const json& body, const char* name, std::size_t fallback) {
  if (!body.contains(name)) return fallback;
  const auto& v = body.at(name);
  if (!v.is_number_integer() || v.get<long long>() < 1) bad_field(name, "expected an integer >= 1");
  return static_cast<std::size_t>(v.get<long long>());
}

RetrievalMethod method_field(const json& body, RetrievalMethod fallback) {
  if (!body.contains("method")) return fallback;
  if (!body.at("method").is_string()) bad_field("method", "expected a string");
  try {
    return parse_retrieval_method(body.at("method").get<std::string>());
  } catch (const Error& e) {
    bad_field("method", e.message());
  }
}

PromptStyle style_field(const json& body, PromptStyle fallback) {
  if (!body.contains("style")) return fallback;
  if (!body.at("style").is_string()) bad_field("style", "expected a string");
  try {
    return parse_prompt_style(body.at("style").get<std::string>());
  } catch (const Error& e) {
    bad_field("style", e.message());
  }
}

DecodeParams decode_field(const json& body, DecodeParams decode) {
  if (!body.contains("decode")) return decode;
  const auto& d = body.at("decode");
  if (!d.is_object()) bad_field("decode", "expected an object");
  decode.beam_size = static_cast<int>(positive_field(d, "beam_size", decode.beam_size));
  decode.max_target_len = static_cast<int>(positive_field(d, "max_target_len", decode.max_target_len));
  return decode;
}

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kConflict: return 409;
    case ErrorKind::kTransport: return 503;
    case ErrorKind::kBackend: return 502;
    default: return 400;
  }
}

}  // namespace

Service::Service(AppConfig config, Resources resources)
    : Service(config, std::move(resources),
              config.generator_endpoint.empty() ? nullptr : make_generator(config.generator_endpoint),
              config.classifier_endpoint.empty() ? nullptr
                                                 : make_classifier(config.classifier_endpoint)) {}

Service::Service(AppConfig config, Resources resources, std::unique_ptr<GeneratorClient> generator,
                 std::unique_ptr<ClassifierClient> classifier)
    : config_(std::move(config)),
      res_(std::move(resources)),
      config_hash_(config_.hash()),
      generator_(std::move(generator)),
      classifier_(std::move(classifier)),
      impl_(std::make_unique<Impl>()) {
  load_feedback_log();
}

Service::~Service() = default;

void Service::load_feedback_log() {
  if (!config_.feedback_log || !std::filesystem::exists(*config_.feedback_log)) return;
  std::ifstream in(*config_.feedback_log, std::ios::binary);
  for (auto& j : read_judgments(in)) {
    generation_ids_.insert(j.generation_id);
    feedback_seen_.emplace(std::move(j.generation_id), std::move(j.judge_id));
  }
  spdlog::info("feedback log: {} judgments reloaded", feedback_seen_.size());
}

ordered_json Service::provenance() const {
  ordered_json p;
  p["seed"] = config_.seed;
  p["config_hash"] = config_hash_;
  return p;
}

ordered_json Service::pair_json(std::size_t index) const {
  const auto& pair = res_.catalog.at(index);
  ordered_json j;
  j["pair_id"] = index;
  j["pun_word"] = pair.pun_word;
  j["alt_word"] = pair.alt_word;
  j["pun_gloss"] = pair.pun_gloss;
  j["alt_gloss"] = pair.alt_gloss;
  j["kind"] = to_string(pair.kind());
  return j;
}

ServiceResponse Service::handle(std::string_view method, std::string_view path,
                                std::string_view body) {
  try {
    if (method == "GET" && path == "/health") return health();
    if (method == "GET" && path == "/pairs") return pairs();
    const bool known = path == "/retrieve" || path == "/generate" || path == "/pipeline" ||
                       path == "/feedback";
    if (!known) throw HttpFailure{404, "not_found", "no route " + std::string(path), {}, {}};
    if (method != "POST") throw HttpFailure{405, "method_not_allowed", "use POST", {}, {}};

    json parsed;
    try {
      parsed = json::parse(body);
    } catch (const json::parse_error&) {
      bad_field("body", "not valid JSON");
    }
    if (!parsed.is_object()) bad_field("body", "expected a JSON object");
    if (path == "/retrieve") return retrieve(parsed);
    if (path == "/generate") return generate_one(parsed);
    if (path == "/pipeline") return pipeline(parsed);
    return feedback(parsed);
  } catch (const HttpFailure& f) {
    ordered_json j;
    j["error"] = f.error;
    j["message"] = f.message;
    if (f.field) j["field"] = *f.field;
    if (f.backend) j["backend"] = *f.backend;
    j["provenance"] = provenance();
    return {f.status, std::move(j)};
  } catch (const Error& e) {
    ordered_json j;
    j["error"] = to_string(e.kind());
    j["message"] = e.message();
    if (e.field()) j["field"] = *e.field();
    j["provenance"] = provenance();
    return {status_for(e.kind()), std::move(j)};
  }
}

ServiceResponse Service::health() const {
  ordered_json j;
  j["status"] = "ok";
  j["pairs"] = res_.catalog.size();
  j["embeddings"] = res_.embeddings.has_value();
  j["generator"] = generator_ ? json(generator_->id()) : json(nullptr);
  j["classifier"] = classifier_ ? json(classifier_->id()) : json(nullptr);
  j["provenance"] = provenance();
  return {200, std::move(j)};
}

ServiceResponse Service::pairs() const {
  ordered_json j;
  j["pairs"] = ordered_json::array();
  for (std::size_t i = 0; i < res_.catalog.size(); ++i) j["pairs"].push_back(pair_json(i));
  j["provenance"] = provenance();
  return {200, std::move(j)};
}

std::vector<ScoredPair> Service::run_retrieval(const ContextSpec& context, std::size_t k,
                                               RetrievalMethod method, std::size_t* shortfall) {
  if (res_.catalog.empty()) unavailable("catalog", "no pun pairs loaded");
  *shortfall = 0;
  if (method == RetrievalMethod::kUnsupervised) {
    if (!res_.embeddings) unavailable("embeddings", "no embedding table configured");
    auto ranked = rank_unsupervised(context, res_.catalog, *res_.embeddings, k);
    *shortfall = k - ranked.size();
    return ranked;
  }
  if (!classifier_) unavailable("classifier", "no classifier endpoint configured");
  try {
    auto result = classify_then_rank(context, res_.catalog, *classifier_, k);
    *shortfall = result.shortfall;
    return std::move(result.pairs);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kTransport) unavailable("classifier", e.message());
    throw;
  }
}

GenerationRecord Service::run_generation(const ContextSpec& context, const PunPair& pair,
                                         const DecodeParams& decode, PromptStyle style) {
  if (!generator_) unavailable("generator", "no generator endpoint configured");
  GenerationRecord record;
  try {
    record = generate(*generator_, context, pair, build_prompt(style, context, pair), decode);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kTransport) unavailable("generator", e.message());
    throw;
  }
  std::lock_guard lock(registry_mutex_);
  generation_ids_.insert(record.generation_id);
  return record;
}

namespace {

ordered_json scored_json(const ordered_json& pair, const ScoredPair& scored) {
  ordered_json j;
  j["rank"] = scored.rank;
  j["score"] = scored.score;
  for (const auto& [k, v] : pair.items()) j[k] = v;
  return j;
}

ordered_json generation_json(const GenerationRecord& r) {
  ordered_json j;
  j["generation_id"] = r.generation_id;
  j["prompt"] = r.prompt;
  j["text"] = r.text;
  j["backend_id"] = r.backend_id;
  j["decode"] = {{"beam_size", r.decode.beam_size},
                 {"max_target_len", r.decode.max_target_len},
                 {"stop", r.decode.stop}};
  return j;
}

}  // namespace

ServiceResponse Service::retrieve(const json& body) {
  const auto context = keywords_field(body);
  const auto k = positive_field(body, "k", config_.k);
  const auto method = method_field(body, config_.retrieval_method);
  std::size_t shortfall = 0;
  const auto ranked = run_retrieval(context, k, method, &shortfall);

  ordered_json j;
  j["context"] = context.keywords;
  j["method"] = to_string(method);
  j["pairs"] = ordered_json::array();
  for (const auto& s : ranked) j["pairs"].push_back(scored_json(pair_json(s.catalog_index), s));
  j["shortfall"] = shortfall;
  j["provenance"] = provenance();
  return {200, std::move(j)};
}

ServiceResponse Service::generate_one(const json& body) {
  const auto context = keywords_field(body);
  if (!body.contains("pair_id")) bad_field("pair_id", "missing");
  const auto& id = body.at("pair_id");
  if (!id.is_number_integer() || id.get<long long>() < 0) bad_field("pair_id", "expected an integer >= 0");
  const auto index = static_cast<std::size_t>(id.get<long long>());
  if (index >= res_.catalog.size())
    throw HttpFailure{404, "not_found", "unknown pair_id " + std::to_string(index), "pair_id", {}};
  const auto decode = decode_field(body, config_.decode);
  const auto style = style_field(body, config_.prompt_style);

  const auto record = run_generation(context, res_.catalog.at(index), decode, style);
  ordered_json j;
  j["context"] = context.keywords;
  j["pair"] = pair_json(index);
  j["generation"] = generation_json(record);
  j["provenance"] = provenance();
  return {200, std::move(j)};
}

ServiceResponse Service::pipeline(const json& body) {
  ContextSpec context;
  if (body.contains("text")) {
    if (!body.at("text").is_string()) bad_field("text", "expected a string");
    try {
      context = build_context(body.at("text").get<std::string>(), std::nullopt, res_.stopwords,
                              res_.lexicon);
    } catch (const Error& e) {
      bad_field("text", e.message());
    }
  } else if (body.contains("keywords")) {
    context = keywords_field(body);
  } else {
    bad_field("keywords", "either text or keywords is required");
  }
  const auto k = positive_field(body, "k", config_.k);
  const auto method = method_field(body, config_.retrieval_method);
  const auto style = style_field(body, config_.prompt_style);
  const auto decode = decode_field(body, config_.decode);

  std::size_t shortfall = 0;
  const auto ranked = run_retrieval(context, k, method, &shortfall);
  ordered_json j;
  j["context"] = context.keywords;
  j["method"] = to_string(method);
  j["results"] = ordered_json::array();
  for (const auto& s : ranked) {
    const auto record = run_generation(context, s.pair, decode, style);
    ordered_json item = scored_json(pair_json(s.catalog_index), s);
    item["generation"] = generation_json(record);
    j["results"].push_back(std::move(item));
  }
  j["shortfall"] = shortfall;
  j["provenance"] = provenance();
  return {200, std::move(j)};
}

ServiceResponse Service::feedback(const json& body) {
  if (!body.contains("generation_id") || !body.at("generation_id").is_string())
    bad_field("generation_id", "expected a string");
  Judgment judgment;
  judgment.generation_id = body.at("generation_id").get<std::string>();
  if (!body.contains("success")) bad_field("success", "missing");
  const auto& s = body.at("success");
  if (s.is_boolean()) {
    judgment.success = s.get<bool>() ? 1 : 0;
  } else if (s.is_number_integer() && (s.get<int>() == 0 || s.get<int>() == 1)) {
    judgment.success = s.get<int>();
  } else {
    bad_field("success", "expected true/false or 0/1");
  }
  judgment.judge_id = "web";
  if (body.contains("judge_id")) {
    if (!body.at("judge_id").is_string() || body.at("judge_id").get<std::string>().empty())
      bad_field("judge_id", "expected a non-empty string");
    judgment.judge_id = body.at("judge_id").get<std::string>();
    if (judgment.judge_id.find_first_of(",\"\r\n") != std::string::npos)
      bad_field("judge_id", "must not contain commas, quotes or newlines");
  }
  {
    std::lock_guard lock(registry_mutex_);
    if (!generation_ids_.contains(judgment.generation_id))
      throw HttpFailure{404, "not_found", "unknown generation_id", "generation_id", {}};
  }

  std::lock_guard lock(feedback_mutex_);
  if (feedback_seen_.contains({judgment.generation_id, judgment.judge_id}))
    throw HttpFailure{409, "conflict", "judgment already recorded", std::nullopt, std::nullopt};
  bool persisted = false;
  if (config_.feedback_log) {
    const bool fresh = !std::filesystem::exists(*config_.feedback_log) ||
                       std::filesystem::file_size(*config_.feedback_log) == 0;
    std::ofstream out(*config_.feedback_log, std::ios::binary | std::ios::app);
    write_judgment_row(out, judgment, fresh);
    out.flush();
    if (!out) unavailable("feedback_log", "cannot append to " + config_.feedback_log->string());
    persisted = true;
  }
  feedback_seen_.emplace(judgment.generation_id, judgment.judge_id);

  ordered_json j;
  j["recorded"] = true;
  j["persisted"] = persisted;
  j["generation_id"] = judgment.generation_id;
  j["judge_id"] = judgment.judge_id;
  j["success"] = judgment.success;
  j["provenance"] = provenance();
  return {200, std::move(j)};
}

// ---------------------------------------------------------------------------
// Socket binding

namespace {

void install_routes(httplib::Server& server, Service& service) {
  const auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    auto out = service.handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  for (const char* path : {"/health", "/pairs", "/retrieve", "/generate", "/pipeline", "/feedback"}) {
    server.Get(path, forward);
    server.Post(path, forward);
  }
}

}  // namespace

bool Service::serve(const std::string& host, int port) {
  install_routes(impl_->server, *this);
  if (config_.ui_dir) impl_->server.set_mount_point("/", config_.ui_dir->string());
  spdlog::info("listening on {}:{} (config {})", host, port, config_hash_);
  return impl_->server.listen(host, port);
}

int Service::bind_ephemeral(const std::string& host) {
  install_routes(impl_->server, *this);
  if (config_.ui_dir) impl_->server.set_mount_point("/", config_.ui_dir->string());
  return impl_->server.bind_to_any_port(host);
}

bool Service::serve_bound() { return impl_->server.listen_after_bind(); }

void Service::stop() { impl_->server.stop(); }

}  // namespace cspun
