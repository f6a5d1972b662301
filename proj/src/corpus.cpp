#include "cspun/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "cspun/error.hpp"
#include "cspun/text.hpp"

namespace cspun {

// ---------------------------------------------------------------------------
// Gloss table

void GlossTable::add(std::string sense_key, std::string gloss) {
  glosses_.insert_or_assign(std::move(sense_key), std::move(gloss));
}

void GlossTable::save(std::ostream& out) const {
  for (const auto& [key, gloss] : glosses_) out << key << '\t' << gloss << '\n';
}

const std::string* GlossTable::find(std::string_view sense_key) const {
  auto it = glosses_.find(sense_key);
  return it == glosses_.end() ? nullptr : &it->second;
}

GlossTable GlossTable::parse(std::istream& in) {
  GlossTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorKind::kParse, "expected 'sense_key<TAB>gloss'", line_no);
    auto key = std::string(trim(std::string_view(line).substr(0, tab)));
    auto gloss = std::string(trim(std::string_view(line).substr(tab + 1)));
    if (key.empty()) throw Error(ErrorKind::kParse, "empty sense key", line_no, "sense_key");
    if (gloss.empty()) throw Error(ErrorKind::kParse, "empty gloss", line_no, "gloss");
    table.add(std::move(key), std::move(gloss));
  }
  return table;
}

GlossTable GlossTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open gloss table " + path.string());
  return parse(in);
}

// ---------------------------------------------------------------------------
// SemEval

std::string sense_key_lemma(std::string_view sense_key) {
  const auto pct = sense_key.find('%');
  return to_lower(trim(sense_key.substr(0, pct)));
}

namespace {

std::string xml_unescape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '&') {
      out += text[i];
      continue;
    }
    static constexpr std::pair<std::string_view, char> kEntities[] = {
        {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
    bool matched = false;
    for (const auto& [entity, ch] : kEntities) {
      if (text.substr(i, entity.size()) == entity) {
        out += ch;
        i += entity.size() - 1;
        matched = true;
        break;
      }
    }
    if (!matched) out += '&';
  }
  return out;
}

std::optional<std::string> attribute(std::string_view tag, std::string_view name) {
  const std::string needle = std::string(name) + "=";
  auto pos = tag.find(needle);
  while (pos != std::string_view::npos && pos > 0 && tag[pos - 1] != ' ' && tag[pos - 1] != '\t' &&
         tag[pos - 1] != '\n')
    pos = tag.find(needle, pos + 1);
  if (pos == std::string_view::npos) return std::nullopt;
  pos += needle.size();
  if (pos >= tag.size() || (tag[pos] != '"' && tag[pos] != '\'')) return std::nullopt;
  const char quote = tag[pos];
  const auto end = tag.find(quote, pos + 1);
  if (end == std::string_view::npos) return std::nullopt;
  return xml_unescape(tag.substr(pos + 1, end - pos - 1));
}

struct SemevalText {
  std::vector<std::pair<std::string, std::string>> words;  // (word id, surface)
};

std::unordered_map<std::string, SemevalText> scan_texts(std::string_view xml) {
  std::unordered_map<std::string, SemevalText> texts;
  std::size_t record = 0;
  std::size_t pos = 0;
  while ((pos = xml.find("<text", pos)) != std::string_view::npos) {
    ++record;
    const auto tag_end = xml.find('>', pos);
    if (tag_end == std::string_view::npos)
      throw Error(ErrorKind::kParse, "unterminated <text> tag in record " + std::to_string(record));
    const auto id = attribute(xml.substr(pos, tag_end - pos), "id");
    if (!id || id->empty())
      throw Error(ErrorKind::kParse, "<text> without id in record " + std::to_string(record));
    const auto close = xml.find("</text>", tag_end);
    if (close == std::string_view::npos)
      throw Error(ErrorKind::kParse, "missing </text> in record " + std::to_string(record));

    SemevalText text;
    const auto body = xml.substr(tag_end + 1, close - tag_end - 1);
    std::size_t wpos = 0;
    while ((wpos = body.find("<word", wpos)) != std::string_view::npos) {
      const auto wtag_end = body.find('>', wpos);
      const auto wclose = body.find("</word>", wpos);
      if (wtag_end == std::string_view::npos || wclose == std::string_view::npos ||
          wclose < wtag_end)
        throw Error(ErrorKind::kParse, "malformed <word> in record " + std::to_string(record));
      const auto wid = attribute(body.substr(wpos, wtag_end - wpos), "id");
      if (!wid || wid->empty())
        throw Error(ErrorKind::kParse, "<word> without id in record " + std::to_string(record));
      text.words.emplace_back(*wid, xml_unescape(body.substr(wtag_end + 1, wclose - wtag_end - 1)));
      wpos = wclose + 7;
    }
    if (!texts.emplace(*id, std::move(text)).second)
      throw Error(ErrorKind::kParse,
                  "duplicate text id '" + *id + "' in record " + std::to_string(record));
    pos = close + 7;
  }
  return texts;
}

// First key in a ';'-separated list that the gloss table resolves.
std::optional<std::pair<std::string, std::string>> resolve_keys(std::string_view keys,
                                                                const GlossTable& glosses) {
  for (const auto& raw : split(keys, ';')) {
    const auto key = std::string(trim(raw));
    if (key.empty()) continue;
    if (const auto* gloss = glosses.find(key)) return std::make_pair(key, *gloss);
  }
  return std::nullopt;
}

}  // namespace

SemevalParse parse_semeval(std::string_view text_xml, std::string_view gold,
                           const GlossTable& glosses) {
  const auto texts = scan_texts(text_xml);
  SemevalParse result;
  std::size_t record = 0;
  for (auto line : split(gold, '\n')) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++record;
    const auto cols = split(line, '\t');
    if (cols.size() < 3 || cols.size() > 4 || trim(cols[0]).empty())
      throw Error(ErrorKind::kParse,
                  "gold record " + std::to_string(record) +
                      ": expected 'word_id<TAB>pun_keys<TAB>alt_keys[<TAB>alt_word]'",
                  record);
    const auto word_id = std::string(trim(cols[0]));
    const auto skip = [&](const std::string& why) {
      ++result.skipped;
      result.skip_reasons.push_back(word_id + ": " + why);
      spdlog::warn("semeval: skipping {}: {}", word_id, why);
    };

    const auto underscore = word_id.rfind('_');
    const auto text_id = underscore == std::string::npos ? word_id : word_id.substr(0, underscore);
    const auto text_it = texts.find(text_id);
    if (text_it == texts.end()) {
      skip("no text with id " + text_id);
      continue;
    }
    const auto& words_in_text = text_it->second.words;
    const auto word_it = std::find_if(words_in_text.begin(), words_in_text.end(),
                                      [&](const auto& w) { return w.first == word_id; });
    if (word_it == words_in_text.end()) {
      skip("pun word id not present in text");
      continue;
    }
    const auto pun = resolve_keys(cols[1], glosses);
    const auto alt = resolve_keys(cols[2], glosses);
    if (!pun || !alt) {
      skip(std::string("unresolvable sense key for ") + (!pun ? "pun word" : "alternative word"));
      continue;
    }

    std::string alt_word = cols.size() == 4 ? std::string(trim(cols[3])) : "";
    if (alt_word.empty()) alt_word = sense_key_lemma(alt->first);
    auto pun_word = sense_key_lemma(pun->first);
    if (pun_word.empty()) pun_word = to_lower(word_it->second);

    std::vector<std::string> surface;
    for (const auto& w : words_in_text) surface.push_back(w.second);
    try {
      result.entries.push_back(
          {text_id, word_id, join(surface, " "),
           PunPair::make(pun_word, alt_word, pun->second, alt->second, pun->first, alt->first)});
    } catch (const Error& e) {
      skip(e.what());
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// CUP

std::string escape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view text, std::size_t line, const char* field) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\') {
      out += text[i];
      continue;
    }
    if (i + 1 == text.size())
      throw Error(ErrorKind::kParse, "dangling backslash", line, field);
    switch (text[++i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: throw Error(ErrorKind::kParse, "unknown escape", line, field);
    }
  }
  return out;
}

CupCounts count_records(const std::vector<CompatibilityRecord>& records) {
  CupCounts counts;
  for (const auto& r : records) {
    ++counts.total;
    (r.label == 1 ? counts.positive : counts.negative)++;
    if (!r.split) {
      ++counts.unsplit;
      continue;
    }
    switch (*r.split) {
      case Split::kTrain: ++counts.train; break;
      case Split::kDev: ++counts.dev; break;
      case Split::kTest: ++counts.test; break;
    }
  }
  return counts;
}

namespace {

CompatibilityRecord parse_cup_row(const std::vector<std::string>& cols, std::size_t line) {
  // Field errors from the domain constructors are re-raised with the line.
  const auto rethrow = [line](const Error& e, const char* fallback_field) -> Error {
    return Error(e.kind(), e.message(), line, e.field().value_or(fallback_field));
  };

  CompatibilityRecord rec;
  try {
    std::vector<std::string> keywords;
    for (const auto& k : split(unescape_field(cols[0], line, "context_keywords"), '|'))
      keywords.push_back(k);
    rec.context = ContextSpec::make(keywords);
  } catch (const Error& e) {
    throw rethrow(e, "context_keywords");
  }
  try {
    rec.pair = PunPair::make(unescape_field(cols[1], line, "pun_word"),
                             unescape_field(cols[2], line, "alt_word"),
                             unescape_field(cols[3], line, "pun_gloss"),
                             unescape_field(cols[4], line, "alt_gloss"));
  } catch (const Error& e) {
    throw rethrow(e, "pun_word");
  }

  if (cols[5] == "1") {
    rec.label = 1;
  } else if (cols[5] == "0") {
    rec.label = 0;
  } else {
    throw Error(ErrorKind::kValidation, "label must be 0 or 1, got '" + cols[5] + "'", line,
                "label");
  }

  if (!cols[6].empty()) rec.human_pun = unescape_field(cols[6], line, "human_pun");
  if (rec.label == 0 && rec.human_pun)
    throw Error(ErrorKind::kValidation, "label 0 rows cannot carry a human pun", line,
                "human_pun");

  if (!cols[7].empty()) {
    int value = 0;
    std::size_t used = 0;
    try {
      value = std::stoi(cols[7], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != cols[7].size())
      throw Error(ErrorKind::kValidation, "difficulty is not an integer", line, "difficulty");
    if (value < 1 || value > 5)
      throw Error(ErrorKind::kValidation, "difficulty must be in [1,5]", line, "difficulty");
    rec.difficulty = value;
  }

  if (!cols[8].empty()) {
    rec.split = parse_split(cols[8]);
    if (!rec.split || cols[8] != to_string(*rec.split))
      throw Error(ErrorKind::kValidation, "split must be train, dev or test", line, "split");
  }
  return rec;
}

}  // namespace

CupDataset parse_cup(std::istream& in) {
  CupDataset data;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    if (!header_seen) {
      const bool ok = cols.size() == kCupColumns.size() &&
                      std::equal(cols.begin(), cols.end(), kCupColumns.begin());
      if (!ok)
        throw Error(ErrorKind::kParse,
                    "header must be the tab-separated columns: context_keywords ... split",
                    line_no);
      header_seen = true;
      continue;
    }
    if (cols.size() != kCupColumns.size())
      throw Error(ErrorKind::kParse,
                  "expected " + std::to_string(kCupColumns.size()) + " columns, got " +
                      std::to_string(cols.size()),
                  line_no);
    data.records.push_back(parse_cup_row(cols, line_no));
  }
  if (!header_seen) throw Error(ErrorKind::kParse, "missing header row", 1);
  data.counts = count_records(data.records);
  return data;
}

CupDataset load_cup(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open CUP file " + path.string());
  return parse_cup(in);
}

void write_cup(std::ostream& out, const std::vector<CompatibilityRecord>& records) {
  for (std::size_t i = 0; i < kCupColumns.size(); ++i)
    out << (i ? "\t" : "") << kCupColumns[i];
  out << '\n';
  for (const auto& r : records) {
    out << escape_field(r.context.joined("|")) << '\t' << escape_field(r.pair.pun_word) << '\t'
        << escape_field(r.pair.alt_word) << '\t' << escape_field(r.pair.pun_gloss) << '\t'
        << escape_field(r.pair.alt_gloss) << '\t' << r.label << '\t'
        << (r.human_pun ? escape_field(*r.human_pun) : "") << '\t'
        << (r.difficulty ? std::to_string(*r.difficulty) : "") << '\t'
        << (r.split ? to_string(*r.split) : "") << '\n';
  }
}

// ---------------------------------------------------------------------------
// Catalog

std::size_t PairCatalog::add(const PunPair& pair) {
  auto key = std::make_pair(pair.pun_word, pair.alt_word);
  auto it = id_index_.find(key);
  if (it == id_index_.end()) {
    pairs_.push_back(pair);
    id_index_.emplace(std::move(key), pairs_.size() - 1);
    return pairs_.size() - 1;
  }
  for (std::size_t i = it->second; i < pairs_.size(); ++i) {
    const auto& p = pairs_[i];
    if (p.pun_word == pair.pun_word && p.alt_word == pair.alt_word &&
        p.pun_gloss == pair.pun_gloss && p.alt_gloss == pair.alt_gloss)
      return i;
  }
  ++gloss_conflicts_;
  pairs_.push_back(pair);
  return pairs_.size() - 1;
}

std::optional<std::size_t> PairCatalog::find(std::string_view pun_word,
                                             std::string_view alt_word) const {
  auto it = id_index_.find({std::string(pun_word), std::string(alt_word)});
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

PairCatalog build_pair_catalog(const std::vector<PunPair>& pairs) {
  PairCatalog catalog;
  for (const auto& p : pairs) catalog.add(p);
  if (catalog.empty()) throw Error(ErrorKind::kValidation, "no valid pun pairs to catalog");
  if (catalog.gloss_conflicts())
    spdlog::warn("catalog: {} pun pairs appear with more than one gloss pair",
                 catalog.gloss_conflicts());
  return catalog;
}

PairCatalog build_pair_catalog(const std::vector<CompatibilityRecord>& records) {
  std::vector<PunPair> pairs;
  pairs.reserve(records.size());
  for (const auto& r : records) pairs.push_back(r.pair);
  return build_pair_catalog(pairs);
}

std::vector<PunPair> parse_pair_lexicon(std::istream& in) {
  std::vector<PunPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    const auto cols = split(line, '\t');
    if (line_no == 1 && cols[0] == "pun_word") continue;
    if (cols.size() != 4 && cols.size() != 6)
      throw Error(ErrorKind::kParse, "expected 4 or 6 tab-separated columns", line_no);
    const auto opt = [](const std::string& s) {
      return s.empty() ? std::nullopt : std::optional<std::string>(s);
    };
    try {
      pairs.push_back(PunPair::make(cols[0], cols[1], unescape_field(cols[2], line_no, "pun_gloss"),
                                    unescape_field(cols[3], line_no, "alt_gloss"),
                                    cols.size() == 6 ? opt(cols[4]) : std::nullopt,
                                    cols.size() == 6 ? opt(cols[5]) : std::nullopt));
    } catch (const Error& e) {
      if (e.line()) throw;
      throw Error(e.kind(), e.message(), line_no, e.field());
    }
  }
  return pairs;
}

std::vector<PunPair> load_pair_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open pair lexicon " + path.string());
  return parse_pair_lexicon(in);
}

void write_pair_lexicon(std::ostream& out, const PairCatalog& catalog) {
  out << "pun_word\talt_word\tpun_gloss\talt_gloss\tpun_sense_key\talt_sense_key\n";
  for (const auto& p : catalog.pairs()) {
    out << p.pun_word << '\t' << p.alt_word << '\t' << escape_field(p.pun_gloss) << '\t'
        << escape_field(p.alt_gloss) << '\t' << p.pun_sense_key.value_or("") << '\t'
        << p.alt_sense_key.value_or("") << '\n';
  }
}

std::vector<PunPair> most_frequent_pairs(const std::vector<PunEntry>& entries,
                                         std::size_t limit) {
  struct Tally {
    std::size_t first;
    std::size_t count;
  };
  std::map<std::pair<std::string, std::string>, Tally> tally;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& p = entries[i].pair;
    auto [it, inserted] = tally.try_emplace({p.pun_word, p.alt_word}, Tally{i, 0});
    ++it->second.count;
  }
  std::vector<Tally> order;
  for (const auto& [key, t] : tally) order.push_back(t);
  std::sort(order.begin(), order.end(), [](const Tally& a, const Tally& b) {
    return a.count != b.count ? a.count > b.count : a.first < b.first;
  });
  if (order.size() > limit) order.resize(limit);
  std::vector<PunPair> pairs;
  for (const auto& t : order) pairs.push_back(entries[t.first].pair);
  return pairs;
}

// ---------------------------------------------------------------------------
// Splits

std::array<std::size_t, 3> split_sizes(std::size_t total, const SplitRatios& ratios) {
  const std::array<double, 3> r = {ratios.train, ratios.dev, ratios.test};
  for (const double x : r) {
    if (!(x >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "split ratios must be >= 0");
  }
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9)
    throw Error(ErrorKind::kInvalidArgument, "split ratios must sum to 1");

  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(total) * r[i];
    // Snap values within rounding noise of an integer (10 * 0.7 = 6.999...).
    const double snapped = std::abs(exact - std::round(exact)) < 1e-9 ? std::round(exact) : exact;
    sizes[i] = static_cast<std::size_t>(std::floor(snapped));
    remainder[i] = snapped - std::floor(snapped);
    assigned += sizes[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++sizes[order[k % 3]];
  return sizes;
}

std::vector<CompatibilityRecord> split_dataset(std::vector<CompatibilityRecord> records,
                                               const SplitRatios& ratios, std::uint64_t seed,
                                               bool force) {
  if (!force) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].split)
        throw Error(ErrorKind::kConflict,
                    "record " + std::to_string(i + 1) +
                        " already has a split; pass force to reassign");
    }
  }
  const auto sizes = split_sizes(records.size(), ratios);
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 engine(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[uniform_below(engine, i)]);
  }
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto split = pos < sizes[0]              ? Split::kTrain
                       : pos < sizes[0] + sizes[1] ? Split::kDev
                                                   : Split::kTest;
    records[order[pos]].split = split;
  }
  return records;
}

}  // namespace cspun
