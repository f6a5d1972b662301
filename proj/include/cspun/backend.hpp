#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "cspun/error.hpp"
#include "cspun/types.hpp"
#include "json.hpp"

namespace cspun {

// ---------------------------------------------------------------------------
// Wire messages

/// Classifier request: {"premise": ..., "hypothesis": ...}
struct ClassifierRequest {
  std::string premise;
  std::string hypothesis;
};

/// Classifier response: {"label": "suitable"|"unsuitable", "confidence": p}
struct ClassifierVerdict {
  bool suitable = false;
  double confidence = 0.0;  // positive-class probability as reported
};

nlohmann::json to_json(const ClassifierRequest& request);
/// Throws Error(kBackend) when the label is unknown or confidence is outside [0,1].
ClassifierVerdict parse_verdict(const nlohmann::json& body);

/// Generation request on the wire: {"prompt", "beam_size", "max_target_len"}.
/// The context and pair travel alongside for in-process stubs only.
struct GenerationRequest {
  std::string prompt;
  int beam_size = 2;
  int max_target_len = 256;
  const ContextSpec* context = nullptr;
  const PunPair* pair = nullptr;
};

nlohmann::json to_json(const GenerationRequest& request);
/// Response {"text": ...}; throws Error(kBackend) when "text" is missing.
std::string parse_generation(const nlohmann::json& body);

// ---------------------------------------------------------------------------
// Retries

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{50};
  double multiplier = 2.0;
};

/// Runs `fn`, retrying Error(kTransport) up to policy.max_retries times with
/// exponential backoff. Other errors propagate immediately.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  auto backoff = policy.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const Error& e) {
      if (!e.retryable() || attempt >= policy.max_retries) throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff = std::chrono::milliseconds(
        static_cast<long long>(static_cast<double>(backoff.count()) * policy.multiplier));
  }
}

// ---------------------------------------------------------------------------
// Transports and clients

/// Request/response exchange of one JSON document.
class JsonTransport {
 public:
  virtual ~JsonTransport() = default;
  virtual nlohmann::json call(const nlohmann::json& request) = 0;
  virtual std::string describe() const = 0;
};

/// POSTs JSON to `http://host:port/path`. Connection failures and 5xx
/// answers raise Error(kTransport); 4xx raise Error(kBackend).
std::unique_ptr<JsonTransport> make_http_transport(const std::string& url,
                                                   std::chrono::seconds timeout = std::chrono::seconds(30));

/// Spawns `command` (via /bin/sh -c) once and exchanges one JSON document per
/// line over its stdin/stdout. A dead child raises Error(kTransport) and is
/// respawned on the next call.
std::unique_ptr<JsonTransport> make_exec_transport(const std::string& command);

class ClassifierClient {
 public:
  virtual ~ClassifierClient() = default;
  virtual ClassifierVerdict classify(const ClassifierRequest& request) = 0;
  virtual std::string id() const = 0;
};

class GeneratorClient {
 public:
  virtual ~GeneratorClient() = default;
  virtual std::string generate(const GenerationRequest& request) = 0;
  virtual std::string id() const = 0;
};

/// Adapts a transport to the classifier contract.
std::unique_ptr<ClassifierClient> make_classifier_client(std::unique_ptr<JsonTransport> transport,
                                                         std::string id);
std::unique_ptr<GeneratorClient> make_generator_client(std::unique_ptr<JsonTransport> transport,
                                                       std::string id);

/// Returns the prompt unchanged.
std::unique_ptr<GeneratorClient> make_echo_generator();
/// Context keywords joined by spaces, then the pun word: "hunts deer boar".
std::unique_ptr<GeneratorClient> make_template_generator();

/// Endpoint strings: "stub:echo", "stub:template", "http://host:port/path",
/// "exec:<command line>". Throws Error(kInvalidArgument) otherwise.
std::unique_ptr<GeneratorClient> make_generator(const std::string& endpoint);
/// Endpoint strings: "http://host:port/path", "exec:<command line>".
std::unique_ptr<ClassifierClient> make_classifier(const std::string& endpoint);

}  // namespace cspun
