// cspun: command-line front end for the pun pipeline.
//
// Every subcommand reads its inputs from files (or the config), writes
// results to stdout or --out, and on failure prints exactly one JSON object
// to stderr and exits 1. Usage errors exit 2.

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cspun/app.hpp"
#include "cspun/error.hpp"
#include "cspun/service.hpp"
#include "cspun/text.hpp"
#include "cspun/wordnet.hpp"

using namespace cspun;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string log_level = "warn";
};

AppConfig load_config(const Globals& g) {
  AppConfig config = g.config_path.empty() ? AppConfig{} : AppConfig::load(g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::kInvalidArgument, "--set expects key=value", std::nullopt, kv);
    config.set(trim(std::string_view(kv).substr(0, eq)), trim(std::string_view(kv).substr(eq + 1)));
  }
  return config;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Opens --out for writing, or stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path, std::ios::binary);
    if (!file_) throw Error(ErrorKind::kNotFound, "cannot write " + path);
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty() && trim(line).front() != '#') lines.emplace_back(line);
  }
  return lines;
}

std::vector<int> read_binary_column(const fs::path& path) {
  std::vector<int> values;
  std::size_t n = 0;
  for (const auto& line : read_lines(path)) {
    ++n;
    const auto t = trim(line);
    if (t != "0" && t != "1")
      throw Error(ErrorKind::kParse, "expected 0 or 1 in " + path.string(), n);
    values.push_back(t == "1");
  }
  return values;
}

void print_counts(const CupCounts& c) {
  nlohmann::ordered_json j{{"total", c.total},   {"positive", c.positive}, {"negative", c.negative},
                           {"train", c.train},   {"dev", c.dev},           {"test", c.test},
                           {"unsplit", c.unsplit}};
  std::cout << j.dump() << '\n';
}

const Resources& need_catalog(const Resources& res) {
  if (res.catalog.empty())
    throw Error(ErrorKind::kInvalidArgument,
                "no pun pairs: set cup_file or pair_lexicon in the config");
  return res;
}

const EmbeddingTable& need_embeddings(const Resources& res) {
  if (!res.embeddings)
    throw Error(ErrorKind::kInvalidArgument, "no embeddings: set embeddings in the config",
                std::nullopt, "embeddings");
  return *res.embeddings;
}

const std::vector<CompatibilityRecord>& need_cup(const Resources& res) {
  if (!res.cup)
    throw Error(ErrorKind::kInvalidArgument, "no CUP file: set cup_file in the config",
                std::nullopt, "cup_file");
  return res.cup->records;
}

void print_ranked(const ContextSpec& context, const std::vector<ScoredPair>& ranked,
                  std::size_t shortfall, bool as_json) {
  if (as_json) {
    nlohmann::ordered_json j;
    j["context"] = context.keywords;
    j["pairs"] = nlohmann::ordered_json::array();
    for (const auto& s : ranked) {
      j["pairs"].push_back({{"rank", s.rank},
                            {"score", s.score},
                            {"pun_word", s.pair.pun_word},
                            {"alt_word", s.pair.alt_word},
                            {"pun_gloss", s.pair.pun_gloss},
                            {"alt_gloss", s.pair.alt_gloss},
                            {"method", to_string(s.method)}});
    }
    j["shortfall"] = shortfall;
    std::cout << j.dump() << '\n';
    return;
  }
  std::cout << "context: " << context.joined(", ") << '\n';
  for (const auto& s : ranked) {
    std::printf("%3zu  %12.6f  %s / %s  (%s | %s)\n", s.rank, s.score, s.pair.pun_word.c_str(),
                s.pair.alt_word.c_str(), s.pair.pun_gloss.c_str(), s.pair.alt_gloss.c_str());
  }
  if (shortfall) std::cout << "shortfall: " << shortfall << '\n';
}

std::vector<GenerationRecord> load_records(const std::string& path) {
  std::istringstream in(read_file(path));
  auto records = read_generation_records(in);
  if (records.empty()) throw Error(ErrorKind::kInvalidArgument, "no records in " + path);
  return records;
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-situated pun toolkit: retrieve pun pairs for a context and generate puns"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config_path, "Config file (key = value lines)")
      ->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Override a config key, e.g. --set k=10 (repeatable)");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
      ->capture_default_str();

  // ingest ------------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Validate or build datasets");
  ingest->require_subcommand(1);

  auto* ingest_cup = ingest->add_subcommand("cup", "Load a CUP file and print its counts");
  std::string cup_path, cup_out;
  bool expect_published = false, assign_splits = false, force_splits = false;
  std::uint64_t split_seed = 0;
  ingest_cup->add_option("--file", cup_path, "CUP file (defaults to cup_file from the config)");
  ingest_cup->add_flag("--expect-published", expect_published,
                       "Fail unless the counts match the published release");
  ingest_cup->add_flag("--assign-splits", assign_splits, "Assign 70/10/20 train/dev/test splits");
  ingest_cup->add_flag("--force", force_splits, "Overwrite existing splits with --assign-splits");
  ingest_cup->add_option("--seed", split_seed, "Shuffle seed for --assign-splits (default: config seed)");
  ingest_cup->add_option("--out", cup_out, "Write the (re-split) dataset here");

  auto* ingest_semeval = ingest->add_subcommand("semeval", "Build a pair lexicon from SemEval pun data");
  std::string xml_path, gold_path, gloss_path, lexicon_out;
  std::size_t top = 500;
  ingest_semeval->add_option("--xml", xml_path, "SemEval text XML")->required()->check(CLI::ExistingFile);
  ingest_semeval->add_option("--gold", gold_path, "Gold sense-key file")->required()->check(CLI::ExistingFile);
  ingest_semeval->add_option("--glosses", gloss_path, "Gloss table (defaults to gloss_table)");
  ingest_semeval->add_option("--top", top, "Keep the N most frequent pairs")->capture_default_str();
  ingest_semeval->add_option("--out", lexicon_out, "Pair lexicon output")->required();

  // catalog -----------------------------------------------------------------
  auto* catalog_cmd = app.add_subcommand("catalog", "Write the deduplicated pair catalog");
  std::string catalog_out = "-";
  catalog_cmd->add_option("--out", catalog_out, "Pair lexicon output")->capture_default_str();

  // keywords ----------------------------------------------------------------
  auto* keywords_cmd = app.add_subcommand("keywords", "Extract a context from text");
  std::string kw_text, kw_input, kw_pun, kw_alt;
  std::size_t kw_max = 8, kw_phrase = 3;
  keywords_cmd->add_option("--text", kw_text, "Sentence to extract from");
  keywords_cmd->add_option("--input", kw_input, "File with one sentence per line")->check(CLI::ExistingFile);
  keywords_cmd->add_option("--pun-word", kw_pun, "Exclude phrases mentioning this word");
  keywords_cmd->add_option("--alt-word", kw_alt, "Exclude phrases mentioning this word");
  keywords_cmd->add_option("--max-keywords", kw_max, "Keep at most N phrases")->capture_default_str();
  keywords_cmd->add_option("--max-phrase-len", kw_phrase, "Longest candidate phrase")->capture_default_str();

  // retrieve ----------------------------------------------------------------
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Rank pun pairs for a context");
  std::string rt_context, rt_text, rt_method;
  std::size_t rt_k = 0;
  bool rt_json = false, rt_glosses = false;
  retrieve_cmd->add_option("--context", rt_context, "Keywords, comma separated");
  retrieve_cmd->add_option("--text", rt_text, "Sentence to extract the context from");
  retrieve_cmd->add_option("--method", rt_method, "unsupervised|classifier (default: config)");
  retrieve_cmd->add_option("--k", rt_k, "Number of pairs (default: config k)");
  retrieve_cmd->add_flag("--append-glosses", rt_glosses, "Send glosses in the classifier hypothesis");
  retrieve_cmd->add_flag("--json", rt_json, "Print JSON");

  // mine --------------------------------------------------------------------
  auto* mine_cmd = app.add_subcommand("mine", "Mine pretraining prompts from a sentence corpus");
  std::string mine_in, mine_out = "-";
  MiningOptions mining;
  mine_cmd->add_option("--sentences", mine_in, "One sentence per line")->required()->check(CLI::ExistingFile);
  mine_cmd->add_option("--out", mine_out, "JSONL output")->capture_default_str();
  mine_cmd->add_option("--per-word", mining.per_word, "Sentences per word")->capture_default_str();
  mine_cmd->add_option("--min-tokens", mining.min_tokens, "Shortest sentence")->capture_default_str();
  mine_cmd->add_option("--max-tokens", mining.max_tokens, "Longest sentence")->capture_default_str();

  // generate ----------------------------------------------------------------
  auto* generate_cmd = app.add_subcommand("generate", "Retrieve and generate for a batch of contexts");
  std::vector<std::string> gen_contexts;
  std::string gen_file, gen_split, gen_backend, gen_style, gen_out = "-", gen_sheet;
  std::size_t gen_k = 1;
  int gen_beam = 0, gen_len = 0;
  generate_cmd->add_option("--context", gen_contexts, "Keywords, comma separated (repeatable)");
  generate_cmd->add_option("--contexts", gen_file, "File with one context per line")->check(CLI::ExistingFile);
  generate_cmd->add_option("--split", gen_split, "Use the distinct contexts of this CUP split");
  generate_cmd->add_option("--backend", gen_backend, "stub:template|stub:echo|http://...|exec:... (default: config)");
  generate_cmd->add_option("--style", gen_style, "pun|ambipun (default: config)");
  generate_cmd->add_option("--k", gen_k, "Pairs per context")->capture_default_str();
  generate_cmd->add_option("--beam-size", gen_beam, "Beam size (default: config)");
  generate_cmd->add_option("--max-target-len", gen_len, "Max target tokens (default: config)");
  generate_cmd->add_option("--out", gen_out, "JSONL output")->capture_default_str();
  generate_cmd->add_option("--sheet", gen_sheet, "Also write a judging sheet (CSV)");

  // evaluate ----------------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "Compute metrics");
  evaluate->require_subcommand(1);

  auto* ev_tp = evaluate->add_subcommand("tp", "TP@N of unsupervised retrieval on CUP");
  std::size_t tp_n = 1;
  std::string tp_split = "test";
  ev_tp->add_option("--n", tp_n, "Top-N")->capture_default_str();
  ev_tp->add_option("--split", tp_split, "train|dev|test|all")->capture_default_str();

  auto* ev_inc = evaluate->add_subcommand("incorporation", "Incorporation rate of generations");
  std::string inc_records, inc_mode = "pun_word";
  ev_inc->add_option("--records", inc_records, "Generation JSONL")->required()->check(CLI::ExistingFile);
  ev_inc->add_option("--mode", inc_mode, "pun_word|context")->capture_default_str();

  auto* ev_cls = evaluate->add_subcommand("classifier", "Macro precision/recall/F1 and accuracy");
  std::string cls_pred, cls_gold;
  ev_cls->add_option("--predictions", cls_pred, "One 0/1 per line")->required()->check(CLI::ExistingFile);
  ev_cls->add_option("--golds", cls_gold, "One 0/1 per line")->required()->check(CLI::ExistingFile);

  auto* ev_judg = evaluate->add_subcommand("judgments", "Majority-vote success rate of a judging sheet");
  std::string judg_sheet, judg_records;
  ev_judg->add_option("--sheet", judg_sheet, "Judging sheet CSV")->required()->check(CLI::ExistingFile);
  ev_judg->add_option("--records", judg_records, "Generation JSONL; rejects unknown ids")->check(CLI::ExistingFile);

  auto* ev_report = evaluate->add_subcommand("report", "End-to-end report");
  std::vector<std::string> report_runs;
  std::string report_judgments, report_format = "table";
  ev_report->add_option("--run", report_runs, "retrieval:FILE.jsonl (repeatable)")->required();
  ev_report->add_option("--judgments", report_judgments, "Judging sheet CSV")->check(CLI::ExistingFile);
  ev_report->add_option("--format", report_format, "table|json")->capture_default_str();

  auto* ev_base = evaluate->add_subcommand("baseline", "Pick the human-written pun for a context");
  std::string base_context;
  ev_base->add_option("--context", base_context, "Keywords, comma separated")->required();

  // kappa -------------------------------------------------------------------
  auto* kappa_cmd = app.add_subcommand("kappa", "Fleiss' kappa of a ratings table");
  std::string kappa_table;
  kappa_cmd->add_option("--table", kappa_table, "Rows of per-category counts, whitespace separated")
      ->required()
      ->check(CLI::ExistingFile);

  // serve -------------------------------------------------------------------
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  std::string serve_host;
  int serve_port = -1;
  serve_cmd->add_option("--host", serve_host, "Bind address (default: config bind_host)");
  serve_cmd->add_option("--port", serve_port, "Port (default: config bind_port)");

  // wordnet -----------------------------------------------------------------
  auto* wordnet_cmd = app.add_subcommand("wordnet", "Export gloss and POS tables from a WordNet dict/");
  std::string wn_dir, wn_glosses, wn_pos;
  wordnet_cmd->add_option("--dict", wn_dir, "WordNet dict directory")->required()->check(CLI::ExistingDirectory);
  wordnet_cmd->add_option("--glosses-out", wn_glosses, "Gloss table output");
  wordnet_cmd->add_option("--pos-out", wn_pos, "POS lexicon output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  auto logger = spdlog::stderr_logger_st("cspun");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    AppConfig config = load_config(g);

    if (ingest_cup->parsed()) {
      const fs::path path = !cup_path.empty() ? fs::path(cup_path)
                            : config.cup_file ? *config.cup_file
                                              : throw Error(ErrorKind::kInvalidArgument,
                                                            "no CUP file given", std::nullopt, "file");
      auto dataset = load_cup(path);
      if (assign_splits) {
        dataset.records = split_dataset(std::move(dataset.records), {},
                                        ingest_cup->count("--seed") ? split_seed : config.seed,
                                        force_splits);
        dataset.counts = count_records(dataset.records);
      }
      if (!cup_out.empty()) {
        Output out(cup_out);
        write_cup(out.stream(), dataset.records);
      }
      print_counts(dataset.counts);
      if (expect_published && !(dataset.counts == kPublishedCupCounts))
        throw Error(ErrorKind::kValidation, "counts differ from the published release");
      return 0;
    }

    if (ingest_semeval->parsed()) {
      const fs::path glosses = !gloss_path.empty() ? fs::path(gloss_path)
                               : config.gloss_table ? *config.gloss_table
                                                    : throw Error(ErrorKind::kInvalidArgument,
                                                                  "no gloss table given", std::nullopt,
                                                                  "glosses");
      const auto parsed = parse_semeval(read_file(xml_path), read_file(gold_path), GlossTable::load(glosses));
      const auto pairs = most_frequent_pairs(parsed.entries, top);
      Output out(lexicon_out);
      write_pair_lexicon(out.stream(), build_pair_catalog(pairs));
      std::cout << nlohmann::ordered_json{{"entries", parsed.entries.size()},
                                          {"skipped", parsed.skipped},
                                          {"pairs", pairs.size()}}
                       .dump()
                << '\n';
      return 0;
    }

    if (catalog_cmd->parsed()) {
      const auto res = load_resources(config, {.load_embeddings = false});
      need_catalog(res);
      Output out(catalog_out);
      write_pair_lexicon(out.stream(), res.catalog);
      spdlog::info("{} pairs, {} gloss conflicts", res.catalog.size(), res.catalog.gloss_conflicts());
      return 0;
    }

    if (keywords_cmd->parsed()) {
      if (kw_text.empty() == kw_input.empty())
        throw Error(ErrorKind::kInvalidArgument, "give exactly one of --text or --input");
      const auto res = load_resources(config, {.load_embeddings = false});
      KeywordOptions options;
      options.max_keywords = kw_max;
      options.rake.max_phrase_len = kw_phrase;
      std::optional<PunPair> exclude;
      if (!kw_pun.empty())
        exclude = PunPair{to_lower(kw_pun), to_lower(kw_alt.empty() ? kw_pun : kw_alt), "", "", {}, {}};
      const auto sentences = kw_text.empty() ? read_lines(kw_input) : std::vector{kw_text};
      for (const auto& s : sentences) {
        try {
          std::cout << build_context(s, exclude, res.stopwords, res.lexicon, options).joined(", ")
                    << '\n';
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kEmptyContext || !kw_text.empty()) throw;
          std::cout << '\n';
        }
      }
      return 0;
    }

    if (retrieve_cmd->parsed()) {
      if (rt_context.empty() == rt_text.empty())
        throw Error(ErrorKind::kInvalidArgument, "give exactly one of --context or --text");
      if (!rt_method.empty()) config.set("retrieval_method", rt_method);
      if (rt_k) config.k = rt_k;
      const bool unsupervised = config.retrieval_method == RetrievalMethod::kUnsupervised;
      const auto res = load_resources(config, {.load_embeddings = unsupervised});
      need_catalog(res);
      const auto context = rt_text.empty()
                               ? ContextSpec::parse(rt_context)
                               : build_context(rt_text, std::nullopt, res.stopwords, res.lexicon);
      if (unsupervised) {
        const auto ranked = rank_unsupervised(context, res.catalog, need_embeddings(res), config.k);
        print_ranked(context, ranked, config.k - ranked.size(), rt_json);
      } else {
        if (config.classifier_endpoint.empty())
          throw Error(ErrorKind::kInvalidArgument, "no classifier endpoint configured",
                      std::nullopt, "classifier_endpoint");
        auto client = make_classifier(config.classifier_endpoint);
        ClassifyOptions options;
        options.append_glosses = rt_glosses;
        const auto result = classify_then_rank(context, res.catalog, *client, config.k, options);
        print_ranked(context, result.pairs, result.shortfall, rt_json);
      }
      return 0;
    }

    if (mine_cmd->parsed()) {
      const auto res = load_resources(config, {.load_embeddings = false});
      need_catalog(res);
      std::ifstream in(mine_in);
      const auto result = mine_pretrain_corpus(in, res.catalog, res.stopwords, res.lexicon, mining);
      Output out(mine_out);
      write_prompt_records(out.stream(), result.records);
      std::cerr << nlohmann::ordered_json{{"records", result.records.size()},
                                          {"sentences_read", result.sentences_read},
                                          {"words_short", result.shortfall.size()}}
                       .dump()
                << '\n';
      return 0;
    }

    if (generate_cmd->parsed()) {
      if (!gen_backend.empty()) config.generator_endpoint = gen_backend;
      if (!gen_style.empty()) config.prompt_style = parse_prompt_style(gen_style);
      if (gen_beam) config.decode.beam_size = gen_beam;
      if (gen_len) config.decode.max_target_len = gen_len;
      ResourceOptions options;
      options.restrict_embeddings = gen_contexts.empty() && gen_file.empty();
      const auto res = load_resources(config, options);
      need_catalog(res);

      std::vector<ContextSpec> contexts;
      for (const auto& c : gen_contexts) contexts.push_back(ContextSpec::parse(c));
      if (!gen_file.empty())
        for (const auto& line : read_lines(gen_file)) contexts.push_back(ContextSpec::parse(line));
      if (!gen_split.empty()) {
        const auto split = parse_split(gen_split);
        if (!split) throw Error(ErrorKind::kInvalidArgument, "unknown split", std::nullopt, "split");
        auto more = distinct_contexts(need_cup(res), split);
        contexts.insert(contexts.end(), more.begin(), more.end());
      }
      if (contexts.empty())
        throw Error(ErrorKind::kInvalidArgument, "no contexts: use --context, --contexts or --split");

      auto generator = make_generator(config.generator_endpoint);
      BatchOptions batch{gen_k, config.prompt_style, config.decode, {}};
      const auto records = run_batch(contexts, res.catalog, need_embeddings(res), *generator, batch);
      Output out(gen_out);
      write_generation_records(out.stream(), records);
      if (!gen_sheet.empty()) export_human_eval(fs::path(gen_sheet), records);
      return 0;
    }

    if (ev_tp->parsed()) {
      std::optional<Split> split;
      if (tp_split != "all") {
        split = parse_split(tp_split);
        if (!split) throw Error(ErrorKind::kInvalidArgument, "unknown split", std::nullopt, "split");
      }
      const auto res = load_resources(config, {.restrict_embeddings = true});
      const auto tp = evaluate_unsupervised_tp(need_cup(res), need_catalog(res).catalog,
                                               need_embeddings(res), tp_n, split);
      std::cout << nlohmann::ordered_json{{"n", tp_n},
                                          {"tp", tp.rate},
                                          {"labeled", tp.labeled},
                                          {"positive", tp.positive},
                                          {"unlabeled", tp.unlabeled},
                                          {"config_hash", config.hash()}}
                       .dump()
                << '\n';
      return 0;
    }

    if (ev_inc->parsed()) {
      const auto mode = inc_mode == "context" ? IncorporationMode::kContext
                        : inc_mode == "pun_word"
                            ? IncorporationMode::kPunWord
                            : throw Error(ErrorKind::kInvalidArgument, "unknown mode", std::nullopt, "mode");
      const auto r = incorporation_rate(load_records(inc_records), mode);
      std::cout << nlohmann::ordered_json{{"mode", inc_mode},
                                          {"rate", r.rate},
                                          {"micro_rate", r.micro_rate},
                                          {"records", r.records},
                                          {"hits", r.hits}}
                       .dump()
                << '\n';
      return 0;
    }

    if (ev_cls->parsed()) {
      const auto m = classifier_metrics(read_binary_column(cls_pred), read_binary_column(cls_gold));
      std::cout << nlohmann::ordered_json{{"f1", m.f1},
                                          {"precision", m.precision},
                                          {"recall", m.recall},
                                          {"accuracy", m.accuracy},
                                          {"tp", m.tp},
                                          {"fp", m.fp},
                                          {"tn", m.tn},
                                          {"fn", m.fn}}
                       .dump()
                << '\n';
      return 0;
    }

    if (ev_judg->parsed()) {
      std::optional<std::set<std::string>> known;
      if (!judg_records.empty()) {
        known.emplace();
        for (const auto& r : load_records(judg_records)) known->insert(r.generation_id);
      }
      const auto s = import_judgments(judg_sheet, known ? &*known : nullptr);
      std::cout << nlohmann::ordered_json{{"success_rate", s.success_rate},
                                          {"generations", s.generations},
                                          {"successes", s.successes},
                                          {"judgments", s.judgments}}
                       .dump()
                << '\n';
      return 0;
    }

    if (ev_report->parsed()) {
      std::vector<PipelineRun> runs;
      for (const auto& spec : report_runs) {
        const auto colon = spec.find(':');
        if (colon == std::string::npos)
          throw Error(ErrorKind::kInvalidArgument, "--run expects retrieval:FILE", std::nullopt, "run");
        auto records = load_records(spec.substr(colon + 1));
        const auto backend = records.front().backend_id;
        runs.push_back({spec.substr(0, colon), backend, std::move(records)});
      }
      std::optional<JudgmentSummary> judgments;
      if (!report_judgments.empty()) judgments = import_judgments(report_judgments);
      const auto report = end_to_end_report(runs, judgments,
                                            {{"config_hash", config.hash()},
                                             {"seed", std::to_string(config.seed)}});
      if (report_format == "json") {
        std::cout << report.to_json().dump(2) << '\n';
      } else {
        std::cout << report.to_table();
      }
      return 0;
    }

    if (ev_base->parsed()) {
      const auto res = load_resources(config, {.load_embeddings = false});
      const auto& r = select_human_baseline(need_cup(res), ContextSpec::parse(base_context), config.seed);
      std::cout << nlohmann::ordered_json{{"pun", *r.human_pun},
                                          {"pun_word", r.pair.pun_word},
                                          {"alt_word", r.pair.alt_word},
                                          {"difficulty", r.difficulty ? nlohmann::json(*r.difficulty)
                                                                      : nlohmann::json(nullptr)}}
                       .dump()
                << '\n';
      return 0;
    }

    if (kappa_cmd->parsed()) {
      std::vector<std::vector<int>> table;
      std::size_t n = 0;
      for (const auto& line : read_lines(kappa_table)) {
        ++n;
        std::istringstream row(line);
        std::vector<int> counts;
        std::string cell;
        while (row >> cell) {
          int v = 0;
          const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
          if (ec != std::errc() || p != cell.data() + cell.size())
            throw Error(ErrorKind::kParse, "not an integer: " + cell, n);
          counts.push_back(v);
        }
        table.push_back(std::move(counts));
      }
      std::printf("%.6f\n", fleiss_kappa(table));
      return 0;
    }

    if (serve_cmd->parsed()) {
      if (!serve_host.empty()) config.bind_host = serve_host;
      if (serve_port >= 0) config.bind_port = serve_port;
      if (!app.get_option("--log-level")->count()) spdlog::set_level(spdlog::level::info);
      Service service(config, load_resources(config));
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      if (!service.serve(config.bind_host, config.bind_port))
        throw Error(ErrorKind::kTransport, "cannot listen on " + config.bind_host + ":" +
                                               std::to_string(config.bind_port));
      return 0;
    }

    if (wordnet_cmd->parsed()) {
      if (wn_glosses.empty() && wn_pos.empty())
        throw Error(ErrorKind::kInvalidArgument, "give --glosses-out and/or --pos-out");
      if (!wn_glosses.empty()) {
        Output out(wn_glosses);
        gloss_table_from_wordnet(wn_dir).save(out.stream());
      }
      if (!wn_pos.empty()) {
        Output out(wn_pos);
        pos_lexicon_from_wordnet(wn_dir).save(out.stream());
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << e.to_json_line() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
