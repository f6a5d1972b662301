#include <fstream>
#include <thread>

#include "cspun/service.hpp"
#include "doctest.h"
#include "httplib.h"
#include "test_support.hpp"

using namespace cspun;
using nlohmann::json;

namespace {

AppConfig small_config() {
  AppConfig config;
  config.pair_lexicon = testing::data_path("pairs_small.tsv");
  config.embeddings = testing::data_path("embeddings_small.txt");
  config.generator_endpoint = "stub:template";
  return config;
}

Service small_service(AppConfig config = small_config()) {
  auto resources = load_resources(config);
  return Service(std::move(config), std::move(resources));
}

json post(Service& s, std::string_view path, const json& body, int expected) {
  const auto r = s.handle("POST", path, body.dump());
  CAPTURE(r.body.dump());
  CHECK(r.status == expected);
  return json::parse(r.body.dump());
}

class FixedClassifier : public ClassifierClient {
 public:
  ClassifierVerdict classify(const ClassifierRequest& r) override {
    return {r.hypothesis.find("fluke") != std::string::npos, 0.75};
  }
  std::string id() const override { return "fixed"; }
};

class DownGenerator : public GeneratorClient {
 public:
  std::string generate(const GenerationRequest&) override {
    throw Error(ErrorKind::kTransport, "connection refused");
  }
  std::string id() const override { return "down"; }
};

}  // namespace

TEST_SUITE("service") {

TEST_CASE("health and pairs") {
  auto s = small_service();
  const auto h = s.handle("GET", "/health", "");
  CHECK(h.status == 200);
  CHECK(h.body["pairs"] == 21);
  CHECK(h.body["embeddings"] == true);
  CHECK(h.body["generator"] == "stub:template");
  CHECK(h.body["classifier"].is_null());
  CHECK(h.body["provenance"]["config_hash"] == s.config_hash());
  CHECK(h.body["provenance"]["seed"] == 20220101);

  const auto p = s.handle("GET", "/pairs", "");
  REQUIRE(p.body["pairs"].size() == 21);
  CHECK(p.body["pairs"][0]["pair_id"] == 0);
  CHECK(p.body["pairs"][0].contains("kind"));
}

TEST_CASE("retrieve") {
  auto s = small_service();
  const auto r = post(s, "/retrieve", {{"keywords", {"whale"}}, {"k", 1}}, 200);
  REQUIRE(r["pairs"].size() == 1);
  CHECK(r["pairs"][0]["pun_word"] == "fluke");
  CHECK(r["pairs"][0]["rank"] == 1);
  CHECK(r["method"] == "unsupervised");
  CHECK(r["shortfall"] == 0);

  const auto wide = post(s, "/retrieve", {{"keywords", "hunts, deer"}, {"k", 50}}, 200);
  CHECK(wide["pairs"].size() == 21);
  CHECK(wide["shortfall"] == 29);
}

TEST_CASE("validation errors name the field") {
  auto s = small_service();
  auto bad = post(s, "/retrieve", {{"keywords", {"whale"}}, {"k", 0}}, 400);
  CHECK(bad["error"] == "validation");
  CHECK(bad["field"] == "k");
  bad = post(s, "/retrieve", json::object(), 400);
  CHECK(bad["field"] == "keywords");
  bad = post(s, "/generate", {{"keywords", {"whale"}}}, 400);
  CHECK(bad["field"] == "pair_id");
  bad = post(s, "/generate", {{"keywords", {"whale"}}, {"pair_id", 999}}, 404);
  CHECK(bad["field"] == "pair_id");
  CHECK(s.handle("POST", "/retrieve", "{not json").status == 400);
  CHECK(s.handle("GET", "/nowhere", "").status == 404);
  CHECK(s.handle("GET", "/retrieve", "").status == 405);
}

TEST_CASE("generate and pipeline with the template stub") {
  auto s = small_service();
  const auto g = post(s, "/generate", {{"keywords", {"hunts", "deer"}}, {"pair_id", 0}}, 200);
  CHECK(g["generation"]["text"] == "hunts deer " + g["pair"]["pun_word"].get<std::string>());
  CHECK(g["generation"]["decode"]["beam_size"] == 2);

  const json req{{"text", "He hunts deer every autumn in the forest."}, {"k", 3}};
  const auto a = post(s, "/pipeline", req, 200);
  const auto b = post(s, "/pipeline", req, 200);
  REQUIRE(a["results"].size() == 3);
  CHECK(a.dump() == b.dump());
  for (const auto& item : a["results"]) {
    const auto text = item["generation"]["text"].get<std::string>();
    CHECK(text.find(item["pun_word"].get<std::string>()) != std::string::npos);
  }
}

TEST_CASE("backends that are missing or down give 503") {
  auto config = small_config();
  config.generator_endpoint.clear();
  auto s = small_service(config);
  auto r = post(s, "/generate", {{"keywords", {"whale"}}, {"pair_id", 0}}, 503);
  CHECK(r["error"] == "backend_unavailable");
  CHECK(r["backend"] == "generator");
  r = post(s, "/retrieve", {{"keywords", {"whale"}}, {"method", "classifier"}}, 503);
  CHECK(r["backend"] == "classifier");

  AppConfig no_emb = small_config();
  no_emb.embeddings.reset();
  auto s2 = small_service(no_emb);
  r = post(s2, "/retrieve", {{"keywords", {"whale"}}}, 503);
  CHECK(r["backend"] == "embeddings");

  auto cfg = small_config();
  auto res = load_resources(cfg);
  Service s3(cfg, std::move(res), std::make_unique<DownGenerator>(), nullptr);
  r = post(s3, "/generate", {{"keywords", {"whale"}}, {"pair_id", 0}}, 503);
  CHECK(r["backend"] == "generator");
}

TEST_CASE("classifier retrieval through an injected client") {
  auto cfg = small_config();
  auto res = load_resources(cfg);
  Service s(cfg, std::move(res), make_template_generator(), std::make_unique<FixedClassifier>());
  const auto r = post(s, "/retrieve", {{"keywords", {"whale"}}, {"method", "classifier"}, {"k", 3}}, 200);
  REQUIRE(r["pairs"].size() == 1);
  CHECK(r["pairs"][0]["pun_word"] == "fluke");
  CHECK(r["pairs"][0]["score"] == 0.75);
  CHECK(r["shortfall"] == 2);
}

TEST_CASE("feedback is recorded once and survives a restart") {
  testing::TempDir dir;
  auto config = small_config();
  config.feedback_log = dir / "feedback.csv";
  std::vector<std::string> ids;
  {
    auto s = small_service(config);
    const auto p = post(s, "/pipeline", {{"keywords", {"hunts", "deer"}}, {"k", 4}}, 200);
    for (const auto& item : p["results"]) ids.push_back(item["generation"]["generation_id"]);
    REQUIRE(ids.size() == 4);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto r = post(s, "/feedback", {{"generation_id", ids[i]}, {"success", i % 2 == 0}}, 200);
      CHECK(r["persisted"] == true);
      CHECK(r["judge_id"] == "web");
    }
    post(s, "/feedback", {{"generation_id", ids[0]}, {"success", 1}}, 409);
    post(s, "/feedback", {{"generation_id", ids[0]}, {"success", 1}, {"judge_id", "amy"}}, 200);
    post(s, "/feedback", {{"generation_id", "nope"}, {"success", 1}}, 404);
    const auto bad = post(s, "/feedback", {{"generation_id", ids[0]}, {"success", "yes"}}, 400);
    CHECK(bad["field"] == "success");
  }
  const auto summary = import_judgments(*config.feedback_log);
  CHECK(summary.judgments == 5);
  CHECK(summary.generations == 4);
  CHECK(summary.success_rate == 50.0);

  auto restarted = small_service(config);
  post(restarted, "/feedback", {{"generation_id", ids[1]}, {"success", 1}}, 409);
  post(restarted, "/feedback", {{"generation_id", ids[1]}, {"success", 1}, {"judge_id", "bo"}}, 200);
}

TEST_CASE("serves over a real socket") {
  auto s = small_service();
  const int port = s.bind_ephemeral("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server([&] { s.serve_bound(); });
  httplib::Client client("127.0.0.1", port);
  httplib::Result health;
  for (int i = 0; i < 100 && !(health = client.Get("/health")); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  REQUIRE(health);
  CHECK(health->status == 200);
  const auto r = client.Post("/retrieve", json{{"keywords", {"whale"}}, {"k", 1}}.dump(),
                             "application/json");
  REQUIRE(r);
  CHECK(json::parse(r->body)["pairs"][0]["pun_word"] == "fluke");
  s.stop();
  server.join();
}

TEST_CASE("http transport") {
  httplib::Server fake;
  int calls = 0;
  fake.Post("/gen", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const auto body = json::parse(req.body);
    res.set_content(json{{"text", "echo: " + body["prompt"].get<std::string>()}}.dump(),
                    "application/json");
  });
  fake.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  fake.Post("/reject", [](const httplib::Request&, httplib::Response& res) { res.status = 422; });
  const int port = fake.bind_to_any_port("127.0.0.1");
  std::thread t([&] { fake.listen_after_bind(); });
  while (!fake.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(5));

  const auto base = "http://127.0.0.1:" + std::to_string(port);
  auto gen = make_generator(base + "/gen");
  GenerationRequest req;
  req.prompt = "hello";
  CHECK(gen->generate(req) == "echo: hello");

  try {
    make_generator(base + "/broken")->generate(req);
    FAIL("expected a transport error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kTransport);
  }
  try {
    make_generator(base + "/reject")->generate(req);
    FAIL("expected a backend error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kBackend);
  }
  fake.stop();
  t.join();
  try {
    make_generator(base + "/gen")->generate(req);
    FAIL("expected a transport error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kTransport);
  }
}

TEST_CASE("exec transport") {
  auto classifier = make_classifier(
      "exec:while read -r line; do echo '{\"label\":\"suitable\",\"confidence\":0.6}'; done");
  for (int i = 0; i < 3; ++i) {
    const auto v = classifier->classify({"hunts, deer", "boar / bore"});
    CHECK(v.suitable);
    CHECK(v.confidence == 0.6);
  }
  auto dead = make_classifier("exec:exit 0");
  CHECK_THROWS_AS(dead->classify({"a", "b"}), Error);
  CHECK_THROWS_AS(make_classifier("stub:template"), Error);
}

}  // TEST_SUITE
