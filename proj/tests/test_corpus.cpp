#include <map>
#include <set>
#include <sstream>

#include "cspun/corpus.hpp"
#include "cspun/error.hpp"
#include "cspun/text.hpp"
#include "cspun/types.hpp"
#include "cspun/wordnet.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cspun;

namespace {

const std::string kHeader =
    "context_keywords\tpun_word\talt_word\tpun_gloss\talt_gloss\tlabel\thuman_pun\tdifficulty\tsplit\n";

CupDataset parse_text(const std::string& body) {
  std::istringstream in(kHeader + body);
  return parse_cup(in);
}

Error parse_error(const std::string& body) {
  try {
    parse_text(body);
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected a parse error");
  return Error(ErrorKind::kParse, "unreachable");
}

std::vector<CompatibilityRecord> unsplit_records(std::size_t n) {
  std::vector<CompatibilityRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    CompatibilityRecord r;
    r.context = ContextSpec::make({"w" + std::to_string(i)});
    r.pair = PunPair::make("p" + std::to_string(i), "a", "g1", "g2");
    r.label = static_cast<int>(i % 2);
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("PunPair validation and kinds") {
  const auto boar = PunPair::make("Boar", " bore ", "swine", "tire");
  CHECK(boar.pun_word == "boar");
  CHECK(boar.alt_word == "bore");
  CHECK(boar.kind() == PairKind::kHeterographic);
  CHECK(PunPair::make("pine", "pine", "tree", "yearn").kind() == PairKind::kHomographic);

  const auto field_of = [](auto&& fn) -> std::string {
    try {
      fn();
    } catch (const Error& e) {
      return e.field().value_or("");
    }
    return "no error";
  };
  CHECK(field_of([] { PunPair::make("", "x", "g", "g"); }) == "pun_word");
  CHECK(field_of([] { PunPair::make("two words", "x", "g", "g"); }) == "pun_word");
  CHECK(field_of([] { PunPair::make("x", "y", "", "g"); }) == "pun_gloss");
  CHECK(field_of([] { PunPair::make("x", "y", "g", " "); }) == "alt_gloss");
}

TEST_CASE("ContextSpec normalization") {
  const auto c = ContextSpec::parse(" Hunts ,  DEER ");
  CHECK(c.keywords == std::vector<std::string>{"hunts", "deer"});
  CHECK(c.joined() == "hunts, deer");
  CHECK(ContextSpec::parse("deer|hunts").key() == c.key());
  CHECK(ContextSpec::make({"fruit   vendor", "daughter"}).keywords[0] == "fruit vendor");
  CHECK_THROWS_AS(ContextSpec::make({}), Error);
  CHECK_THROWS_AS(ContextSpec::make({"a", "A"}), Error);
  CHECK_THROWS_AS(ContextSpec::make({"a b c d e f"}), Error);
  std::vector<std::string> many;
  for (int i = 0; i < 17; ++i) many.push_back("k" + std::to_string(i));
  CHECK_THROWS_AS(ContextSpec::make(many), Error);
}

TEST_CASE("split names") {
  CHECK(parse_split("valid") == Split::kDev);
  CHECK(parse_split("test") == Split::kTest);
  CHECK_FALSE(parse_split("holdout").has_value());
}

TEST_CASE("load the sample CUP file") {
  const auto ds = load_cup(testing::data_path("cup_sample.tsv"));
  CHECK(ds.counts.total == 21);
  CHECK(ds.counts.positive == 17);
  CHECK(ds.counts.negative == 4);
  CHECK(ds.counts.positive + ds.counts.negative == ds.counts.total);
  CHECK(ds.counts.train + ds.counts.dev + ds.counts.test + ds.counts.unsplit == ds.counts.total);
  CHECK(ds.records[0].context.keywords == std::vector<std::string>{"hunts", "deer"});
  CHECK(ds.records[0].difficulty == 2);
  CHECK(ds.records[1].label == 0);
  CHECK_FALSE(ds.records[1].human_pun.has_value());
}

TEST_CASE("CUP ingest is lossless on canonical files") {
  const auto original = testing::slurp(testing::data_path("cup_sample.tsv"));
  const auto ds = load_cup(testing::data_path("cup_sample.tsv"));
  std::ostringstream out;
  write_cup(out, ds.records);
  CHECK(out.str() == original);

  // Fields with tabs and newlines survive the escape round trip.
  auto records = ds.records;
  records[0].human_pun = "line one\nline\ttwo \\ done";
  std::ostringstream again;
  write_cup(again, records);
  std::istringstream in(again.str());
  CHECK(parse_cup(in).records == records);
}

TEST_CASE("CUP errors name line and field") {
  auto e = parse_error("whale\tfluke\tfluke\tluck\ttail\t0\tIt was a fluke.\t\ttest\n");
  CHECK(e.line() == 2u);
  CHECK(e.field() == "human_pun");

  e = parse_error("whale\tfluke\tfluke\tluck\ttail\t1\t\t\ttest\nwhale\tfluke\tfluke\tluck\ttail\tyes\t\t\t\n");
  CHECK(e.line() == 3u);
  CHECK(e.field() == "label");

  e = parse_error("whale\tfluke\tfluke\tluck\ttail\t1\t\t9\t\n");
  CHECK(e.field() == "difficulty");

  e = parse_error("whale\tfluke\tfluke\tluck\ttail\t1\t\t\tTest\n");
  CHECK(e.field() == "split");

  e = parse_error("whale\tfluke\tfluke\t\ttail\t1\t\t\t\n");
  CHECK(e.field() == "pun_gloss");

  e = parse_error("whale\tfluke\n");
  CHECK(e.line() == 2u);

  std::istringstream no_header("whale\tfluke\tfluke\tluck\ttail\t1\t\t\t\n");
  CHECK_THROWS_AS(parse_cup(no_header), Error);
}

TEST_CASE("published counts") {
  CHECK(kPublishedCupCounts.total == 4551);
  CHECK(kPublishedCupCounts.positive + kPublishedCupCounts.negative == 4551);
  CHECK(kPublishedCupCounts.train + kPublishedCupCounts.dev + kPublishedCupCounts.test == 4551);
}

TEST_CASE("pair catalog dedup, order and lookup") {
  const auto ds = load_cup(testing::data_path("cup_sample.tsv"));
  const auto catalog = build_pair_catalog(ds.records);
  CHECK(catalog.size() == 21);
  CHECK(catalog.at(0).pun_word == "hedges");
  for (const auto& r : ds.records) {
    const auto id = catalog.find(r.pair.pun_word, r.pair.alt_word);
    REQUIRE(id.has_value());
    CHECK(catalog.at(*id).pun_gloss == r.pair.pun_gloss);
    CHECK(catalog.at(*id).alt_gloss == r.pair.alt_gloss);
  }

  const auto boar = PunPair::make("boar", "bore", "swine", "tire");
  const auto pine = PunPair::make("pine", "pine", "tree", "yearn");
  const auto two = build_pair_catalog(std::vector<PunPair>{boar, boar});
  CHECK(two.size() == 1);
  const auto kinds = build_pair_catalog(std::vector<PunPair>{boar, pine});
  CHECK(kinds.at(0).kind() == PairKind::kHeterographic);
  CHECK(kinds.at(1).kind() == PairKind::kHomographic);

  PairCatalog conflicting;
  conflicting.add(boar);
  conflicting.add(PunPair::make("boar", "bore", "hog", "tire"));
  CHECK(conflicting.size() == 2);
  CHECK(conflicting.gloss_conflicts() == 1);
  CHECK(conflicting.at(*conflicting.find("boar", "bore")).pun_gloss == "swine");

  CHECK_THROWS_AS(build_pair_catalog(std::vector<PunPair>{}), Error);
}

TEST_CASE("pair lexicon round trip") {
  const auto pairs = load_pair_lexicon(testing::data_path("pairs_small.tsv"));
  CHECK(pairs.size() == 21);
  std::ostringstream out;
  write_pair_lexicon(out, build_pair_catalog(pairs));
  std::istringstream in(out.str());
  CHECK(parse_pair_lexicon(in) == pairs);

  std::istringstream four("# comment\nboar\tbore\tswine\ttire\n");
  CHECK(parse_pair_lexicon(four).size() == 1);
  std::istringstream bad("boar\tbore\tswine\n");
  CHECK_THROWS_AS(parse_pair_lexicon(bad), Error);
}

TEST_CASE("SemEval ingest") {
  const auto glosses = GlossTable::load(testing::data_path("semeval_glosses.tsv"));
  const auto xml = testing::slurp(testing::data_path("semeval_sample.xml"));
  const auto gold = testing::slurp(testing::data_path("semeval_sample.gold"));
  const auto parsed = parse_semeval(xml, gold, glosses);
  REQUIRE(parsed.entries.size() == 4);
  CHECK(parsed.skipped == 1);

  const auto& stair = parsed.entries[0].pair;
  CHECK(stair.pun_word == "stair");
  CHECK(stair.alt_word == "stare");
  CHECK(stair.pun_gloss.rfind("support consisting of a place to rest the foot", 0) == 0);
  CHECK(stair.alt_gloss == "look at with fixed eyes");
  CHECK(stair.kind() == PairKind::kHeterographic);
  CHECK(parsed.entries[1].text.find("\"") != std::string::npos);
  CHECK(parsed.entries[3].pair.kind() == PairKind::kHomographic);

  const auto empty = parse_semeval(xml, "", glosses);
  CHECK(empty.entries.empty());
  CHECK(empty.skipped == 0);

  CHECK_THROWS_AS(parse_semeval(xml, "het_1_6\tonly-two-columns\n", glosses), Error);
}

TEST_CASE("SemEval three records, one unresolvable") {
  const auto glosses = GlossTable::load(testing::data_path("semeval_glosses.tsv"));
  const auto xml = testing::slurp(testing::data_path("semeval_sample.xml"));
  const std::string gold =
      "het_1_6\tstair%1:06:00::\tstare%2:39:00::\n"
      "hom_2_11\tfluke%1:11:00::\tfluke%1:05:00::\n"
      "hom_1_11\tsweep%2:35:00::\tsweep%2:99:99::\n";
  const auto parsed = parse_semeval(xml, gold, glosses);
  CHECK(parsed.entries.size() == 2);
  CHECK(parsed.skipped == 1);
}

TEST_CASE("sense key lemma") {
  CHECK(sense_key_lemma("stair%1:06:00::") == "stair");
  CHECK(sense_key_lemma("get_together%1:14:00::") == "get_together");
}

TEST_CASE("most frequent pairs") {
  auto make = [](const char* p, const char* a) {
    return PunEntry{"t", "t_1", "text", PunPair::make(p, a, "g", "h")};
  };
  const std::vector<PunEntry> entries{make("a", "b"), make("c", "d"), make("c", "d"), make("e", "f")};
  const auto top = most_frequent_pairs(entries, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].pun_word == "c");
  CHECK(top[1].pun_word == "a");
}

TEST_CASE("split sizes by largest remainder") {
  CHECK(split_sizes(10, {}) == std::array<std::size_t, 3>{7, 1, 2});
  CHECK(split_sizes(4551, {}) == std::array<std::size_t, 3>{3186, 455, 910});
  CHECK(split_sizes(0, {}) == std::array<std::size_t, 3>{0, 0, 0});
  CHECK_THROWS_AS(split_sizes(10, {0.5, 0.5, 0.5}), Error);
  for (std::size_t n = 0; n < 200; ++n) {
    const auto s = split_sizes(n, {});
    CHECK(s[0] + s[1] + s[2] == n);
  }
}

TEST_CASE("split_dataset is a deterministic partition") {
  const auto records = unsplit_records(10);
  const auto a = split_dataset(records, {}, 7);
  const auto b = split_dataset(records, {}, 7);
  CHECK(a == b);
  std::map<Split, int> counts;
  for (const auto& r : a) {
    REQUIRE(r.split.has_value());
    ++counts[*r.split];
  }
  CHECK(counts[Split::kTrain] == 7);
  CHECK(counts[Split::kDev] == 1);
  CHECK(counts[Split::kTest] == 2);

  const auto c = split_dataset(records, {}, 8);
  CHECK(count_records(c) == count_records(a));

  const auto big = split_dataset(unsplit_records(4551), {}, 1);
  const auto counts_big = count_records(big);
  CHECK(counts_big.train == 3186);
  CHECK(counts_big.dev == 455);
  CHECK(counts_big.test == 910);
}

TEST_CASE("split_dataset refuses to overwrite") {
  const auto ds = load_cup(testing::data_path("cup_sample.tsv"));
  try {
    split_dataset(ds.records, {}, 1);
    FAIL("expected a conflict");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConflict);
  }
  CHECK(split_dataset(ds.records, {}, 1, true).size() == ds.records.size());
}

TEST_CASE("gloss table parsing") {
  std::istringstream in("a%1:01:00::\tfirst gloss\n\nb%2:02:00::\tsecond\n");
  const auto t = GlossTable::parse(in);
  CHECK(t.size() == 2);
  REQUIRE(t.find("b%2:02:00::") != nullptr);
  CHECK(*t.find("b%2:02:00::") == "second");
  CHECK(t.find("c") == nullptr);
  std::istringstream bad("no-tab-here\n");
  CHECK_THROWS_AS(GlossTable::parse(bad), Error);
}

TEST_CASE("WordNet export") {
  CHECK(definition_only("a stroke of luck; \"it was a fluke\"") == "a stroke of luck");
  CHECK(definition_only("plain gloss") == "plain gloss");

  testing::TempDir dict;
  dict.write("index.sense",
             "fluke%1:11:00:: 07344894 1 0\n"
             "stare%2:39:00:: 02129289 1 5\n");
  dict.write("data.noun",
             "  1 This software and database is being provided\n"
             "07344894 11 n 02 fluke 0 good_luck 0 000 | a stroke of luck; \"it was a fluke\"  \n");
  dict.write("data.verb", "02129289 39 v 01 stare 0 000 | look at with fixed eyes  \n");
  dict.write("data.adj", "");
  dict.write("data.adv", "");
  dict.write("index.noun", "  1 license line\nfluke n 3 1 @ 3 0 07344894\n");
  dict.write("index.verb", "stare v 2 1 @ 2 0 02129289\n");
  dict.write("index.adj", "");
  dict.write("index.adv", "");
  const auto glosses = gloss_table_from_wordnet(dict.path());
  REQUIRE(glosses.find("fluke%1:11:00::") != nullptr);
  CHECK(*glosses.find("fluke%1:11:00::") == "a stroke of luck");
  CHECK(*glosses.find("stare%2:39:00::") == "look at with fixed eyes");
  const auto pos = pos_lexicon_from_wordnet(dict.path());
  CHECK(pos.tags("fluke") == static_cast<unsigned>(CoarseTag::kNoun));
  CHECK(pos.tags("stare") == static_cast<unsigned>(CoarseTag::kVerb));
}

}  // TEST_SUITE
