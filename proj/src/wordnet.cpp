#include "cspun/wordnet.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "cspun/error.hpp"
#include "cspun/text.hpp"

namespace cspun {
namespace {

struct PosFile {
  const char* suffix;
  char ss_digit;  // sense-key ss_type for this file
  CoarseTag tag;
};

constexpr PosFile kPosFiles[] = {
    {"noun", '1', CoarseTag::kNoun},
    {"verb", '2', CoarseTag::kVerb},
    {"adj", '3', CoarseTag::kAdj},
    {"adv", '4', CoarseTag::kAdv},
};

std::ifstream open_dict_file(const std::filesystem::path& dir, const std::string& name) {
  std::ifstream in(dir / name);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + (dir / name).string());
  return in;
}

// Data files start with a license block whose lines begin with two spaces.
bool is_license_line(const std::string& line) { return line.size() >= 2 && line[0] == ' '; }

}  // namespace

std::string definition_only(std::string_view gloss) {
  auto text = trim(gloss);
  for (std::size_t pos = text.find(';'); pos != std::string_view::npos;
       pos = text.find(';', pos + 1)) {
    const auto rest = trim(text.substr(pos + 1));
    if (!rest.empty() && rest.front() == '"') return std::string(trim(text.substr(0, pos)));
  }
  if (!text.empty() && text.front() == '"') return "";
  return std::string(text);
}

GlossTable gloss_table_from_wordnet(const std::filesystem::path& dict_dir) {
  // offset -> gloss, keyed per data file since offsets are byte positions.
  std::unordered_map<char, std::unordered_map<std::string, std::string>> glosses;
  for (const auto& pf : kPosFiles) {
    auto in = open_dict_file(dict_dir, std::string("data.") + pf.suffix);
    auto& table = glosses[pf.ss_digit];
    std::string line;
    while (std::getline(in, line)) {
      if (is_license_line(line) || line.empty()) continue;
      const auto space = line.find(' ');
      const auto bar = line.find(" | ");
      if (space == std::string::npos || bar == std::string::npos) continue;
      table.emplace(line.substr(0, space), definition_only(line.substr(bar + 3)));
    }
  }

  GlossTable out;
  auto in = open_dict_file(dict_dir, "index.sense");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string key;
    std::string offset;
    if (!(fields >> key >> offset)) continue;
    const auto pct = key.find('%');
    if (pct == std::string::npos || pct + 1 >= key.size())
      throw Error(ErrorKind::kParse, "malformed sense key '" + key + "'", line_no);
    // Satellite adjectives (5) live in data.adj.
    const char digit = key[pct + 1] == '5' ? '3' : key[pct + 1];
    const auto file_it = glosses.find(digit);
    if (file_it == glosses.end()) continue;
    const auto g = file_it->second.find(offset);
    if (g != file_it->second.end() && !g->second.empty()) out.add(key, g->second);
  }
  return out;
}

PosLexicon pos_lexicon_from_wordnet(const std::filesystem::path& dict_dir) {
  PosLexicon lexicon;
  for (const auto& pf : kPosFiles) {
    auto in = open_dict_file(dict_dir, std::string("index.") + pf.suffix);
    std::string line;
    while (std::getline(in, line)) {
      if (is_license_line(line) || line.empty()) continue;
      const auto space = line.find(' ');
      if (space == std::string::npos || space == 0) continue;
      lexicon.add(to_lower(line.substr(0, space)), pf.tag);
    }
  }
  return lexicon;
}

}  // namespace cspun
