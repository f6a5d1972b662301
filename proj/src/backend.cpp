#include "cspun/backend.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <mutex>

#include "cspun/text.hpp"
#include "httplib.h"

namespace cspun {

nlohmann::json to_json(const ClassifierRequest& request) {
  return {{"premise", request.premise}, {"hypothesis", request.hypothesis}};
}

ClassifierVerdict parse_verdict(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("label") || !body["label"].is_string())
    throw Error(ErrorKind::kBackend, "verdict lacks a string 'label'");
  if (!body.contains("confidence") || !body["confidence"].is_number())
    throw Error(ErrorKind::kBackend, "verdict lacks a numeric 'confidence'");
  ClassifierVerdict verdict;
  const auto label = body["label"].get<std::string>();
  if (label == "suitable") {
    verdict.suitable = true;
  } else if (label != "unsuitable") {
    throw Error(ErrorKind::kBackend, "unknown verdict label '" + label + "'");
  }
  verdict.confidence = body["confidence"].get<double>();
  if (!(verdict.confidence >= 0.0 && verdict.confidence <= 1.0))
    throw Error(ErrorKind::kBackend, "confidence outside [0,1]");
  return verdict;
}

nlohmann::json to_json(const GenerationRequest& request) {
  return {{"prompt", request.prompt},
          {"beam_size", request.beam_size},
          {"max_target_len", request.max_target_len}};
}

std::string parse_generation(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("text") || !body["text"].is_string())
    throw Error(ErrorKind::kBackend, "generation response lacks a string 'text'");
  return body["text"].get<std::string>();
}

namespace {

// ---------------------------------------------------------------------------
// HTTP

class HttpTransport : public JsonTransport {
 public:
  HttpTransport(std::string base, std::string path, std::chrono::seconds timeout)
      : base_(std::move(base)), path_(std::move(path)), timeout_(timeout) {}

  nlohmann::json call(const nlohmann::json& request) override {
    // One client per call keeps concurrent callers independent.
    httplib::Client client(base_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    auto res = client.Post(path_, request.dump(), "application/json");
    if (!res)
      throw Error(ErrorKind::kTransport,
                  describe() + ": " + httplib::to_string(res.error()));
    if (res->status >= 500)
      throw Error(ErrorKind::kTransport,
                  describe() + ": HTTP " + std::to_string(res->status));
    if (res->status >= 400)
      throw Error(ErrorKind::kBackend, describe() + ": HTTP " + std::to_string(res->status) +
                                           " " + res->body);
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorKind::kBackend, describe() + ": response is not JSON");
    }
  }

  std::string describe() const override { return base_ + path_; }

 private:
  std::string base_;
  std::string path_;
  std::chrono::seconds timeout_;
};

// ---------------------------------------------------------------------------
// Child process over pipes

class ExecTransport : public JsonTransport {
 public:
  explicit ExecTransport(std::string command) : command_(std::move(command)) {}
  ~ExecTransport() override { stop(); }

  nlohmann::json call(const nlohmann::json& request) override {
    std::lock_guard lock(mutex_);
    if (pid_ <= 0) start();
    const auto payload = request.dump() + "\n";
    if (!write_all(payload)) {
      stop();
      throw Error(ErrorKind::kTransport, describe() + ": write to child failed");
    }
    std::string line;
    if (!read_line(line)) {
      stop();
      throw Error(ErrorKind::kTransport, describe() + ": child closed its output");
    }
    try {
      return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorKind::kBackend, describe() + ": response is not JSON");
    }
  }

  std::string describe() const override { return "exec:" + command_; }

 private:
  void start() {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0) throw Error(ErrorKind::kTransport, "pipe() failed");
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw Error(ErrorKind::kTransport, "pipe() failed");
    }
    const pid_t pid = fork();
    if (pid < 0) throw Error(ErrorKind::kTransport, "fork() failed");
    if (pid == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    pid_ = pid;
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    buffer_.clear();
  }

  void stop() {
    if (write_fd_ >= 0) close(write_fd_);
    if (read_fd_ >= 0) close(read_fd_);
    write_fd_ = read_fd_ = -1;
    if (pid_ > 0) {
      kill(pid_, SIGTERM);
      waitpid(pid_, nullptr, 0);
    }
    pid_ = -1;
  }

  bool write_all(const std::string& data) {
    // A child that exited would otherwise kill us with SIGPIPE.
    struct sigaction ignore {};
    struct sigaction previous {};
    ignore.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &ignore, &previous);
    std::size_t done = 0;
    bool ok = true;
    while (done < data.size()) {
      const auto n = ::write(write_fd_, data.data() + done, data.size() - done);
      if (n <= 0) {
        ok = false;
        break;
      }
      done += static_cast<std::size_t>(n);
    }
    sigaction(SIGPIPE, &previous, nullptr);
    return ok;
  }

  bool read_line(std::string& line) {
    while (true) {
      if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return true;
      }
      char chunk[4096];
      const auto n = ::read(read_fd_, chunk, sizeof chunk);
      if (n <= 0) return false;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::string command_;
  std::mutex mutex_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

// ---------------------------------------------------------------------------
// Clients

class TransportClassifier : public ClassifierClient {
 public:
  TransportClassifier(std::unique_ptr<JsonTransport> transport, std::string id)
      : transport_(std::move(transport)), id_(std::move(id)) {}
  ClassifierVerdict classify(const ClassifierRequest& request) override {
    return parse_verdict(transport_->call(to_json(request)));
  }
  std::string id() const override { return id_; }

 private:
  std::unique_ptr<JsonTransport> transport_;
  std::string id_;
};

class TransportGenerator : public GeneratorClient {
 public:
  TransportGenerator(std::unique_ptr<JsonTransport> transport, std::string id)
      : transport_(std::move(transport)), id_(std::move(id)) {}
  std::string generate(const GenerationRequest& request) override {
    return parse_generation(transport_->call(to_json(request)));
  }
  std::string id() const override { return id_; }

 private:
  std::unique_ptr<JsonTransport> transport_;
  std::string id_;
};

class EchoGenerator : public GeneratorClient {
 public:
  std::string generate(const GenerationRequest& request) override { return request.prompt; }
  std::string id() const override { return "stub:echo"; }
};

class TemplateGenerator : public GeneratorClient {
 public:
  std::string generate(const GenerationRequest& request) override {
    if (!request.context || !request.pair)
      throw Error(ErrorKind::kInvalidArgument, "stub:template needs the context and pair");
    return request.context->joined(" ") + " " + request.pair->pun_word;
  }
  std::string id() const override { return "stub:template"; }
};

struct ParsedUrl {
  std::string base;  // scheme://host:port
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorKind::kInvalidArgument, "endpoint URL lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::unique_ptr<JsonTransport> transport_for(const std::string& endpoint) {
  if (endpoint.starts_with("http://") || endpoint.starts_with("https://"))
    return make_http_transport(endpoint);
  if (endpoint.starts_with("exec:")) return make_exec_transport(endpoint.substr(5));
  throw Error(ErrorKind::kInvalidArgument, "unsupported endpoint '" + endpoint + "'");
}

}  // namespace

std::unique_ptr<JsonTransport> make_http_transport(const std::string& url,
                                                   std::chrono::seconds timeout) {
  if (url.starts_with("https://"))
    throw Error(ErrorKind::kInvalidArgument, "https endpoints are not supported: " + url);
  auto parsed = parse_url(url);
  return std::make_unique<HttpTransport>(std::move(parsed.base), std::move(parsed.path), timeout);
}

std::unique_ptr<JsonTransport> make_exec_transport(const std::string& command) {
  if (trim(command).empty()) throw Error(ErrorKind::kInvalidArgument, "empty exec command");
  return std::make_unique<ExecTransport>(command);
}

std::unique_ptr<ClassifierClient> make_classifier_client(std::unique_ptr<JsonTransport> transport,
                                                         std::string id) {
  return std::make_unique<TransportClassifier>(std::move(transport), std::move(id));
}

std::unique_ptr<GeneratorClient> make_generator_client(std::unique_ptr<JsonTransport> transport,
                                                       std::string id) {
  return std::make_unique<TransportGenerator>(std::move(transport), std::move(id));
}

std::unique_ptr<GeneratorClient> make_echo_generator() { return std::make_unique<EchoGenerator>(); }

std::unique_ptr<GeneratorClient> make_template_generator() {
  return std::make_unique<TemplateGenerator>();
}

std::unique_ptr<GeneratorClient> make_generator(const std::string& endpoint) {
  if (endpoint == "stub:echo") return make_echo_generator();
  if (endpoint == "stub:template") return make_template_generator();
  return make_generator_client(transport_for(endpoint), endpoint);
}

std::unique_ptr<ClassifierClient> make_classifier(const std::string& endpoint) {
  return make_classifier_client(transport_for(endpoint), endpoint);
}

}  // namespace cspun
