#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>

#include "cspun/app.hpp"
#include "json.hpp"

namespace cspun {

struct ServiceResponse {
  int status = 200;
  nlohmann::ordered_json body;
};

/// The HTTP API. Routing lives in handle() so it can be exercised without a
/// socket; serve() binds it to cpp-httplib.
///
///   GET  /health
///   GET  /pairs
///   POST /retrieve  {keywords[], k?, method?}
///   POST /generate  {keywords[], pair_id, decode?, style?}
///   POST /pipeline  {text | keywords[], k?, method?, style?}
///   POST /feedback  {generation_id, success, judge_id?}
class Service {
 public:
  /// Backends are built from the config endpoints. Either may be absent;
  /// requests that need a missing one get 503.
  Service(AppConfig config, Resources resources);
  Service(AppConfig config, Resources resources, std::unique_ptr<GeneratorClient> generator,
          std::unique_ptr<ClassifierClient> classifier);
  ~Service();

  ServiceResponse handle(std::string_view method, std::string_view path, std::string_view body);

  /// Blocks until stop() is called or the listener fails. Returns false when
  /// the address cannot be bound.
  bool serve(const std::string& host, int port);
  /// Binds to an ephemeral port and returns it; call serve_bound() afterwards.
  int bind_ephemeral(const std::string& host);
  bool serve_bound();
  void stop();

  const AppConfig& config() const { return config_; }
  const std::string& config_hash() const { return config_hash_; }

 private:
  struct Impl;

  ServiceResponse health() const;
  ServiceResponse pairs() const;
  ServiceResponse retrieve(const nlohmann::json& body);
  ServiceResponse generate_one(const nlohmann::json& body);
  ServiceResponse pipeline(const nlohmann::json& body);
  ServiceResponse feedback(const nlohmann::json& body);

  nlohmann::ordered_json provenance() const;
  nlohmann::ordered_json pair_json(std::size_t index) const;
  std::vector<ScoredPair> run_retrieval(const ContextSpec& context, std::size_t k,
                                        RetrievalMethod method, std::size_t* shortfall);
  GenerationRecord run_generation(const ContextSpec& context, const PunPair& pair,
                                  const DecodeParams& decode, PromptStyle style);
  void load_feedback_log();

  AppConfig config_;
  Resources res_;
  std::string config_hash_;
  std::unique_ptr<GeneratorClient> generator_;
  std::unique_ptr<ClassifierClient> classifier_;

  std::mutex registry_mutex_;
  std::set<std::string> generation_ids_;

  std::mutex feedback_mutex_;
  std::set<std::pair<std::string, std::string>> feedback_seen_;

  std::unique_ptr<Impl> impl_;
};

}  // namespace cspun
