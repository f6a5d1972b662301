#include <numeric>
#include <random>
#include <sstream>

#include "cspun/app.hpp"
#include "cspun/error.hpp"
#include "cspun/evaluation.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cspun;

namespace {

GenerationRecord record(const std::vector<std::string>& keywords, const std::string& pun,
                        const std::string& alt, const std::string& text,
                        const std::string& id = "") {
  GenerationRecord r;
  r.context = ContextSpec::make(keywords);
  r.pair = PunPair::make(pun, alt, pun + " sense", alt + " sense");
  r.text = text;
  r.generation_id = id.empty() ? pun + "-" + text : id;
  r.backend_id = "test";
  return r;
}

// Exact rational arithmetic for the kappa oracle.
struct Q {
  long long n = 0, d = 1;
  Q(long long num = 0, long long den = 1) : n(num), d(den) { norm(); }
  void norm() {
    if (d < 0) n = -n, d = -d;
    const auto g = std::gcd(n < 0 ? -n : n, d);
    if (g > 1) n /= g, d /= g;
  }
  friend Q operator+(Q a, Q b) { return {a.n * b.d + b.n * a.d, a.d * b.d}; }
  friend Q operator-(Q a, Q b) { return {a.n * b.d - b.n * a.d, a.d * b.d}; }
  friend Q operator*(Q a, Q b) { return {a.n * b.n, a.d * b.d}; }
  friend Q operator/(Q a, Q b) { return {a.n * b.d, a.d * b.n}; }
  double value() const { return static_cast<double>(n) / static_cast<double>(d); }
};

double kappa_oracle(const std::vector<std::vector<int>>& table) {
  const long long items = static_cast<long long>(table.size());
  const long long raters = std::accumulate(table[0].begin(), table[0].end(), 0LL);
  Q agreement;
  std::vector<long long> columns(table[0].size(), 0);
  for (const auto& row : table) {
    long long s = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      s += static_cast<long long>(row[j]) * (row[j] - 1);
      columns[j] += row[j];
    }
    agreement = agreement + Q(s, raters * (raters - 1));
  }
  const Q observed = agreement / Q(items);
  Q chance;
  for (const auto c : columns) chance = chance + Q(c, items * raters) * Q(c, items * raters);
  return ((observed - chance) / (Q(1) - chance)).value();
}

ClassifierMetrics metrics_oracle(const std::vector<int>& p, const std::vector<int>& g) {
  auto ratio = [](double a, double b) { return b == 0 ? 0.0 : a / b; };
  double precision = 0, recall = 0, f1 = 0, correct = 0;
  for (int cls : {0, 1}) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] == cls && g[i] == cls) ++tp;
      if (p[i] == cls && g[i] != cls) ++fp;
      if (p[i] != cls && g[i] == cls) ++fn;
    }
    const double pr = ratio(tp, tp + fp), rc = ratio(tp, tp + fn);
    precision += pr / 2;
    recall += rc / 2;
    f1 += ratio(2 * pr * rc, pr + rc) / 2;
  }
  for (std::size_t i = 0; i < p.size(); ++i) correct += p[i] == g[i];
  ClassifierMetrics m;
  m.precision = 100 * precision;
  m.recall = 100 * recall;
  m.f1 = 100 * f1;
  m.accuracy = 100 * correct / static_cast<double>(p.size());
  return m;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("incorporation rates") {
  const std::vector<GenerationRecord> records{
      record({"hunts", "deer"}, "boar", "bore", "The hunter found the deer and boars dull."),
      record({"hunts", "deer"}, "pine", "pine", "He hunted deer all day."),
  };
  const auto pun = incorporation_rate(records, IncorporationMode::kPunWord);
  CHECK(pun.rate == 50.0);
  CHECK(pun.hits == 1);
  const auto ctx = incorporation_rate(records, IncorporationMode::kContext);
  CHECK(ctx.rate == 50.0);
  CHECK(ctx.micro_rate == 75.0);
  CHECK_THROWS_AS(incorporation_rate({}, IncorporationMode::kPunWord), Error);
}

TEST_CASE("incorporation ignores case and inflection") {
  const auto pair = PunPair::make("stare", "stair", "look", "step");
  CHECK(incorporates_pun_word("They STARED.", pair));
  CHECK(incorporates_pun_word("she stares", pair));
  CHECK_FALSE(incorporates_pun_word("staircase", pair));
  const std::vector<GenerationRecord> upper{
      record({"construction workers"}, "stare", "stair", "WORKER ON A CONSTRUCTION SITE")};
  CHECK(incorporation_rate(upper, IncorporationMode::kContext).rate == 100.0);
}

TEST_CASE("TP@N worked example") {
  const auto ctx1 = ContextSpec::make({"a"});
  const auto ctx2 = ContextSpec::make({"b"});
  const auto p = PunPair::make("p", "p", "x", "y");
  const auto q = PunPair::make("q", "q", "x", "y");
  auto labelled = [](const ContextSpec& c, const PunPair& pair, int label) {
    CompatibilityRecord r;
    r.context = c;
    r.pair = pair;
    r.label = label;
    return r;
  };
  const std::vector<CompatibilityRecord> gold{labelled(ctx1, p, 1), labelled(ctx1, q, 0),
                                              labelled(ctx2, p, 1), labelled(ctx2, q, 1),
                                              labelled(ctx2, q, 0)};
  const GoldLabels labels(gold);
  CHECK(labels.size() == 4);
  CHECK(labels.find(ctx2, q) == std::optional<int>(1));
  auto scored = [](const PunPair& pair) { return ScoredPair{pair, 0, 0.0, 0}; };
  const std::vector<ContextRetrieval> runs{{ctx1, {scored(p), scored(q)}},
                                           {ctx2, {scored(p), scored(q)}}};
  const auto r = tp_at_n(runs, labels, 2);
  CHECK(r.rate == 75.0);
  CHECK(r.labeled == 4);
  CHECK(tp_at_n(runs, labels, 1).rate == 100.0);
  CHECK(tp_at_n(runs, labels, 5).rate == 75.0);
  CHECK_THROWS_AS(tp_at_n(runs, labels, 0), Error);

  const auto u = PunPair::make("u", "u", "x", "y");
  const auto partial = tp_at_n({{ctx1, {scored(u), scored(p)}}}, labels, 2);
  CHECK(partial.unlabeled == 1);
  CHECK(partial.rate == 100.0);
  CHECK_THROWS_AS(tp_at_n({{ctx1, {scored(u)}}}, labels, 1), Error);
}

TEST_CASE("TP@N stays within bounds and grows with labelled positives") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<CompatibilityRecord> gold;
    std::vector<ContextRetrieval> runs;
    for (int c = 0; c < 5; ++c) {
      const auto ctx = ContextSpec::make({"c" + std::to_string(c)});
      ContextRetrieval run{ctx, {}};
      for (int i = 0; i < 4; ++i) {
        const auto pair = PunPair::make("w" + std::to_string(i), "w" + std::to_string(i), "x", "y");
        CompatibilityRecord r;
        r.context = ctx;
        r.pair = pair;
        r.label = static_cast<int>(rng() % 2);
        gold.push_back(r);
        run.ranked.push_back({pair, 0, 0.0, 0});
      }
      runs.push_back(run);
    }
    const auto r = tp_at_n(runs, GoldLabels(gold), 3);
    CHECK(r.rate >= 0.0);
    CHECK(r.rate <= 100.0);
    for (auto& g : gold) g.label = 1;
    CHECK(tp_at_n(runs, GoldLabels(gold), 3).rate == 100.0);
  }
}

TEST_CASE("classifier metrics: all-positive predictor") {
  std::vector<int> golds(590, 1);
  golds.insert(golds.end(), 341, 0);
  const std::vector<int> preds(golds.size(), 1);
  const auto m = classifier_metrics(preds, golds);
  CHECK(m.accuracy == doctest::Approx(63.37).epsilon(0.0001));
  CHECK(m.recall == doctest::Approx(50.0));
  CHECK(m.tp == 590);
  CHECK(m.fp == 341);
  CHECK(m.tn == 0);
  CHECK(m.fn == 0);
}

TEST_CASE("classifier metrics agree with an oracle and are label-swap invariant") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<int> p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = rng() % 2, g[i] = rng() % 2;
    const auto m = classifier_metrics(p, g);
    const auto o = metrics_oracle(p, g);
    CHECK(m.f1 == doctest::Approx(o.f1));
    CHECK(m.precision == doctest::Approx(o.precision));
    CHECK(m.recall == doctest::Approx(o.recall));
    CHECK(m.accuracy == doctest::Approx(o.accuracy));
    for (std::size_t i = 0; i < n; ++i) p[i] ^= 1, g[i] ^= 1;
    const auto s = classifier_metrics(p, g);
    CHECK(s.f1 == doctest::Approx(m.f1));
    CHECK(s.accuracy == doctest::Approx(m.accuracy));
  }
  CHECK_THROWS_AS(classifier_metrics({1}, {1, 0}), Error);
  CHECK_THROWS_AS(classifier_metrics({}, {}), Error);
}

TEST_CASE("Fleiss' kappa") {
  CHECK(fleiss_kappa({{3, 0}, {0, 3}, {3, 0}}) == doctest::Approx(1.0));
  CHECK(fleiss_kappa({{3, 0}, {3, 0}}) == 1.0);
  CHECK(fleiss_kappa({{2, 0}, {1, 1}, {1, 1}, {0, 2}}) == doctest::Approx(0.0));

  const std::vector<std::vector<int>> textbook{
      {0, 0, 0, 0, 14}, {0, 2, 6, 4, 2}, {0, 0, 3, 5, 6}, {0, 3, 9, 2, 0}, {2, 2, 8, 1, 1},
      {7, 7, 0, 0, 0},  {3, 2, 6, 3, 0}, {2, 5, 3, 2, 2}, {6, 5, 2, 1, 0}, {0, 2, 2, 3, 7}};
  CHECK(fleiss_kappa(textbook) == doctest::Approx(kappa_oracle(textbook)).epsilon(1e-12));
  CHECK(fleiss_kappa(textbook) == doctest::Approx(0.210).epsilon(0.005));

  CHECK_THROWS_AS(fleiss_kappa({}), Error);
  CHECK_THROWS_AS(fleiss_kappa({{2, 1}, {1, 1}}), Error);
  CHECK_THROWS_AS(fleiss_kappa({{1, 0}, {0, 1}}), Error);
  CHECK_THROWS_AS(fleiss_kappa({{-1, 3}, {1, 1}}), Error);
}

TEST_CASE("Fleiss' kappa agrees with the rational oracle on random tables") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int items = 2 + static_cast<int>(rng() % 12);
    const int cats = 2 + static_cast<int>(rng() % 4);
    const int raters = 2 + static_cast<int>(rng() % 6);
    std::vector<std::vector<int>> table(items, std::vector<int>(cats, 0));
    for (auto& row : table)
      for (int r = 0; r < raters; ++r) ++row[rng() % cats];
    std::vector<int> columns(cats, 0);
    for (const auto& row : table)
      for (int j = 0; j < cats; ++j) columns[j] += row[j];
    if (std::count(columns.begin(), columns.end(), 0) == cats - 1) continue;
    const double k = fleiss_kappa(table);
    CHECK(k == doctest::Approx(kappa_oracle(table)).epsilon(1e-12));
    CHECK(k <= 1.0 + 1e-12);
  }
}

TEST_CASE("human baseline prefers the least difficult pun") {
  const auto ctx = ContextSpec::make({"hunts", "deer"});
  const auto other = ContextSpec::make({"whale"});
  auto rec = [](const ContextSpec& c, const std::string& w, int label, std::optional<int> d,
                std::optional<std::string> pun) {
    return CompatibilityRecord{c, PunPair::make(w, w, "a", "b"), label, std::move(pun), d, {}};
  };
  std::vector<CompatibilityRecord> records{
      rec(ctx, "a", 1, 3, "hard one"),       rec(ctx, "b", 1, 1, "easy one"),
      rec(ctx, "c", 0, 1, "negative"),       rec(ctx, "d", 1, 1, "easy two"),
      rec(ctx, "e", 1, std::nullopt, "undated"), rec(other, "f", 1, 1, "elsewhere"),
      rec(ctx, "g", 1, 1, std::nullopt)};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto& pick = select_human_baseline(records, ctx, seed);
    CHECK(pick.difficulty == std::optional<int>(1));
    CHECK(pick.label == 1);
    CHECK(pick.human_pun.has_value());
    CHECK(pick.context == ctx);
    CHECK(&pick == &select_human_baseline(records, ctx, seed));
  }
  const std::vector<CompatibilityRecord> undated{rec(ctx, "x", 1, std::nullopt, "one"),
                                                 rec(ctx, "y", 1, std::nullopt, "two")};
  CHECK(select_human_baseline(undated, ctx, 1).human_pun.has_value());
  CHECK_THROWS_AS(select_human_baseline(records, ContextSpec::make({"nothing"}), 1), Error);
}

TEST_CASE("CSV quoting round trip") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  std::istringstream in("a,\"b,c\",\"d\"\"e\"\r\n\"multi\nline\",x,\n");
  const auto rows = parse_csv(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "b,c", "d\"e"});
  CHECK(rows[1] == std::vector<std::string>{"multi\nline", "x", ""});
  std::istringstream bad("\"open");
  CHECK_THROWS_AS(parse_csv(bad), Error);
}

TEST_CASE("judging sheet export and majority vote") {
  std::vector<GenerationRecord> records;
  std::set<std::string> ids;
  for (int i = 0; i < 60; ++i) {
    records.push_back(record({"ctx, with comma"}, "boar", "bore", "text \"" + std::to_string(i) + "\"",
                             "g" + std::to_string(i)));
    ids.insert(records.back().generation_id);
  }
  std::ostringstream sheet;
  export_human_eval(sheet, records);
  std::istringstream unjudged(sheet.str());
  CHECK(read_judgments(unjudged, &ids).empty());

  // 24 items get 2 or 3 successes of 3 votes; the others get 0 or 1.
  std::ostringstream judged;
  for (int i = 0; i < 60; ++i) {
    const int yes = i < 24 ? 2 + i % 2 : i % 2;
    for (int j = 0; j < 3; ++j)
      write_judgment_row(judged, {"g" + std::to_string(i), "judge" + std::to_string(j), j < yes},
                         i == 0 && j == 0);
  }
  std::istringstream in(judged.str());
  const auto judgments = read_judgments(in, &ids);
  CHECK(judgments.size() == 180);
  const auto summary = summarize_judgments(judgments);
  CHECK(summary.generations == 60);
  CHECK(summary.successes == 24);
  CHECK(summary.success_rate == 40.0);
  CHECK(summary.judgments == 180);
}

TEST_CASE("judgment errors") {
  const std::set<std::string> ids{"g1"};
  auto read = [&](const std::string& body) {
    std::istringstream in("generation_id,judge_id,success\n" + body);
    return read_judgments(in, &ids);
  };
  CHECK(read("g1,a,1\n").size() == 1);
  CHECK(read("g1,a,\n").empty());
  try {
    read("g1,a,1\ng1,a,0\n");
    FAIL("expected a conflict");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConflict);
    CHECK(e.line() == std::optional<std::size_t>(3));
  }
  try {
    read("g9,a,1\n");
    FAIL("expected not found");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNotFound);
  }
  CHECK_THROWS_AS(read("g1,a,yes\n"), Error);
  CHECK_THROWS_AS(read("g1,,1\n"), Error);
  std::istringstream no_header("x,y\n");
  CHECK_THROWS_AS(read_judgments(no_header), Error);
}

TEST_CASE("end-to-end report") {
  PipelineRun run{"unsupervised", "stub:template",
                  {record({"hunts", "deer"}, "boar", "bore", "hunts deer boar", "g1"),
                   record({"whale"}, "fluke", "fluke", "whale", "g2")}};
  const auto report = end_to_end_report({run}, std::nullopt, {{"config_hash", "abc"}});
  REQUIRE(report.rows.size() == 1);
  const auto& row = report.rows[0];
  CHECK(row.metrics.at("context_incorporation") == 100.0);
  CHECK(row.metrics.at("pun_word_incorporation") == 50.0);
  CHECK_FALSE(row.metrics.contains("success"));
  CHECK(report.to_table().find("success") == std::string::npos);
  CHECK(report.to_table().find("# config_hash: abc") != std::string::npos);
  CHECK(report.to_json().dump() ==
        end_to_end_report({run}, std::nullopt, {{"config_hash", "abc"}}).to_json().dump());

  JudgmentSummary judged;
  judged.per_generation = {{"g1", true}, {"g2", false}, {"other", true}};
  const auto with = end_to_end_report({run}, judged, {{"config_hash", "abc"}});
  CHECK(with.rows[0].metrics.at("success") == 50.0);
  CHECK(with.rows[0].counts.at("judged") == 2);
  CHECK(with.to_table().find("success") != std::string::npos);

  CHECK_THROWS_AS(end_to_end_report({run}, std::nullopt, {}), Error);
}

TEST_CASE("generation records round trip through JSON lines") {
  auto r = record({"hunts", "deer"}, "boar", "bore", "line one\nline \"two\"", "g1");
  r.prompt = "p";
  r.decode.beam_size = 3;
  std::stringstream io;
  write_generation_records(io, {r, r});
  const auto back = read_generation_records(io);
  REQUIRE(back.size() == 2);
  CHECK(back[0].text == r.text);
  CHECK(back[0].pair == r.pair);
  CHECK(back[0].context == r.context);
  CHECK(back[0].decode == r.decode);
  std::istringstream bad("{\"generation_id\": 1}\n");
  try {
    read_generation_records(bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.line() == std::optional<std::size_t>(1));
  }
}

TEST_CASE("config parsing, validation and hashing") {
  testing::TempDir dir;
  dir.write("emb.txt", "a 1 2\n");
  std::istringstream in(
      "# comment\n"
      "embeddings = emb.txt\n"
      "k = 3\n"
      "retrieval_method = unsupervised\n"
      "prompt_style = ambipun\n"
      "beam_size = 4\n");
  auto config = AppConfig::parse(in, dir.path());
  CHECK(config.embeddings == dir / "emb.txt");
  CHECK(config.k == 3);
  CHECK(config.prompt_style == PromptStyle::kAmbipun);
  CHECK(config.decode.beam_size == 4);
  CHECK_NOTHROW(config.validate());

  const auto h = config.hash();
  std::istringstream reordered(
      "beam_size = 4\nprompt_style = ambipun\nk = 3\nembeddings = emb.txt\n");
  CHECK(h == AppConfig::parse(reordered, dir.path()).hash());
  config.set("k", "4");
  CHECK(config.hash() != h);

  auto fail_line = [&](const std::string& text) -> std::optional<std::size_t> {
    std::istringstream s(text);
    try {
      AppConfig::parse(s, dir.path());
    } catch (const Error& e) {
      return e.line();
    }
    return std::nullopt;
  };
  CHECK(fail_line("k = 1\nbogus = 2\n") == std::optional<std::size_t>(2));
  CHECK(fail_line("k = 1\n\nk = 2\n") == std::optional<std::size_t>(3));
  CHECK(fail_line("k = lots\n") == std::optional<std::size_t>(1));
  CHECK(fail_line("no equals sign\n") == std::optional<std::size_t>(1));

  AppConfig missing;
  missing.set("cup_file", "nope.tsv", std::nullopt, dir.path());
  try {
    missing.validate();
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.field() == std::optional<std::string>("cup_file"));
  }
  AppConfig zero;
  zero.k = 0;
  CHECK_THROWS_AS(zero.validate(), Error);

  for (const auto key : kConfigKeys) CHECK(config.canonical().find(std::string(key) + " = ") != std::string::npos);
}

}  // TEST_SUITE
