#include <algorithm>

#include "cspun/keywords.hpp"
#include "cspun/text.hpp"

namespace cspun {
namespace {

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool all_ascii_letters(std::string_view w) {
  return std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

bool has_vowel(std::string_view stem) {
  // 'y' counts inside a stem ("try" from "trying").
  return std::any_of(stem.begin(), stem.end(), [](char c) { return is_vowel(c) || c == 'y'; });
}

int vowel_groups(std::string_view stem) {
  int groups = 0;
  bool in_group = false;
  for (const char c : stem) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  return groups;
}

bool ends_with(std::string_view w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

// Repairs a stem left behind by stripping -ed/-ing: undoubles final
// consonants and restores a silent e.
std::string fix_stem(std::string stem) {
  const auto n = stem.size();
  if (n >= 2 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1]) && stem[n - 1] != 'l' &&
      stem[n - 1] != 's' && stem[n - 1] != 'z') {
    stem.pop_back();
    return stem;
  }
  const char last = stem.back();
  if (last == 'v' || last == 'c' || ends_with(stem, "bl") || ends_with(stem, "iz")) {
    return stem + "e";
  }
  if (n >= 3 && !is_vowel(stem[n - 3]) && is_vowel(stem[n - 2]) && !is_vowel(last) &&
      last != 'w' && last != 'x' && last != 'y' && vowel_groups(stem) == 1) {
    return stem + "e";
  }
  return stem;
}

constexpr SuffixRule kRules[] = {
    {"sses", "ss", "classes", "class"},
    {"ies", "y", "parties", "party"},  // "ie" when the word has 4 letters: ties -> tie
    {"ches", "ch", "watches", "watch"},
    {"shes", "sh", "wishes", "wish"},
    {"xes", "x", "boxes", "box"},
    {"zzes", "zz", "buzzes", "buzz"},
    {"ss", "ss", "glass", "glass"},
    {"us", "us", "census", "census"},
    {"is", "is", "analysis", "analysis"},
    {"s", "", "hunts", "hunt"},
    {"ied", "y", "carried", "carry"},  // "ie" for 4 letters: tied -> tie
    {"eed", "eed", "need", "need"},
    {"ed", "", "stared", "stare"},
    {"ing", "", "staring", "stare"},
};

// One rewrite step; returns the input when no rule fires.
std::string step(const std::string& w) {
  const auto& exceptions = lemma_exceptions();
  if (auto it = exceptions.find(w); it != exceptions.end()) return it->second;
  if (ends_with(w, "'s") && w.size() > 2) return w.substr(0, w.size() - 2);
  if (w.size() <= 3 || protected_lemmas().contains(w) || !all_ascii_letters(w)) return w;

  for (const auto& rule : kRules) {
    if (!ends_with(w, rule.suffix)) continue;
    const std::string stem = w.substr(0, w.size() - rule.suffix.size());
    if (rule.suffix == "ies" || rule.suffix == "ied") {
      return w.size() <= 4 ? w.substr(0, w.size() - 1) : stem + "y";
    }
    if (rule.suffix == "ed" || rule.suffix == "ing") {
      if (stem.size() < 2 || !has_vowel(stem)) return w;
      return fix_stem(stem);
    }
    return stem + std::string(rule.replacement);
  }
  return w;
}

}  // namespace

const std::map<std::string, std::string, std::less<>>& lemma_exceptions() {
  static const std::map<std::string, std::string, std::less<>> kTable = {
      {"ran", "run"},         {"geese", "goose"},     {"went", "go"},
      {"gone", "go"},         {"goes", "go"},         {"men", "man"},
      {"women", "woman"},     {"children", "child"},  {"mice", "mouse"},
      {"feet", "foot"},       {"teeth", "tooth"},     {"is", "be"},
      {"are", "be"},          {"was", "be"},          {"were", "be"},
      {"been", "be"},         {"being", "be"},        {"am", "be"},
      {"has", "have"},        {"had", "have"},        {"having", "have"},
      {"does", "do"},         {"did", "do"},          {"done", "do"},
      {"made", "make"},       {"said", "say"},        {"says", "say"},
      {"took", "take"},       {"taken", "take"},      {"gave", "give"},
      {"given", "give"},      {"came", "come"},       {"got", "get"},
      {"gotten", "get"},      {"knew", "know"},       {"known", "know"},
      {"thought", "think"},   {"brought", "bring"},   {"bought", "buy"},
      {"caught", "catch"},    {"taught", "teach"},    {"found", "find"},
      {"told", "tell"},       {"felt", "feel"},       {"kept", "keep"},
      {"left", "leave"},      {"lost", "lose"},       {"met", "meet"},
      {"paid", "pay"},        {"sat", "sit"},         {"sold", "sell"},
      {"sent", "send"},       {"spent", "spend"},     {"stood", "stand"},
      {"understood", "understand"}, {"won", "win"},   {"wrote", "write"},
      {"written", "write"},   {"spoke", "speak"},     {"spoken", "speak"},
      {"broke", "break"},     {"broken", "break"},    {"chose", "choose"},
      {"chosen", "choose"},   {"drove", "drive"},     {"driven", "drive"},
      {"ate", "eat"},         {"eaten", "eat"},       {"fell", "fall"},
      {"fallen", "fall"},     {"flew", "fly"},        {"flown", "fly"},
      {"forgot", "forget"},   {"forgotten", "forget"}, {"grew", "grow"},
      {"grown", "grow"},      {"hid", "hide"},        {"hidden", "hide"},
      {"rode", "ride"},       {"ridden", "ride"},     {"rose", "rise"},
      {"risen", "rise"},      {"sang", "sing"},       {"sung", "sing"},
      {"sank", "sink"},       {"sunk", "sink"},       {"swam", "swim"},
      {"threw", "throw"},     {"thrown", "throw"},    {"wore", "wear"},
      {"worn", "wear"},       {"began", "begin"},     {"begun", "begin"},
      {"became", "become"},   {"drank", "drink"},     {"drunk", "drink"},
      {"lying", "lie"},       {"dying", "die"},       {"tying", "tie"},
      {"dyed", "dye"},        {"dyeing", "dye"},      {"died", "die"},
      {"knives", "knife"},    {"wives", "wife"},      {"wolves", "wolf"},
      {"shelves", "shelf"},   {"halves", "half"},     {"calves", "calf"},
      {"used", "use"},        {"using", "use"},       {"agreed", "agree"},
      {"freed", "free"},      {"fled", "flee"},       {"added", "add"},
      {"adding", "add"},      {"shoes", "shoe"},      {"toes", "toe"},
      {"potatoes", "potato"}, {"tomatoes", "tomato"}, {"heroes", "hero"},
      {"echoes", "echo"},     {"oxen", "ox"},         {"seen", "see"},
      {"saw", "see"},         {"heard", "hear"},      {"held", "hold"},
      {"led", "lead"},        {"built", "build"},
      {"dealt", "deal"},      {"meant", "mean"},      {"slept", "sleep"},
      {"swept", "sweep"},     {"wept", "weep"},       {"fought", "fight"},
      {"sought", "seek"},     {"struck", "strike"},   {"stuck", "stick"},
      {"hung", "hang"},       {"shot", "shoot"},      {"fed", "feed"},
      {"bled", "bleed"},      {"bred", "breed"},      {"sped", "speed"},
      {"caused", "cause"},    {"causing", "cause"},   {"pleased", "please"},
      {"changed", "change"},  {"changing", "change"}, {"ranged", "range"},
      {"people", "person"},
  };
  return kTable;
}

const std::set<std::string, std::less<>>& protected_lemmas() {
  static const std::set<std::string, std::less<>> kWords = [] {
    std::set<std::string, std::less<>> words = {
        "during",  "morning", "evening", "ceiling",  "nothing", "something", "anything",
        "everything", "pudding", "wedding", "series", "species", "news",  "this",
        "his",     "thus",    "plus",    "always",   "perhaps", "whereas", "hundred",
        "sacred",  "naked",   "wicked",  "kindred",  "beloved", "lens",
        "chaos",   "atlas",   "canvas",  "bias",     "alias",   "christmas", "ethics",
        "physics", "mathematics", "politics", "economics", "sirius", "lotus", "bonus",
    };
    // Every exception target is itself a lemma.
    for (const auto& [form, lemma] : lemma_exceptions()) words.insert(lemma);
    return words;
  }();
  return kWords;
}

std::span<const SuffixRule> lemma_rules() { return kRules; }

std::string lemmatize(std::string_view token) {
  std::string current = to_lower(trim(token));
  // Every step either shortens the word or leaves it unchanged (restoring an
  // e after stripping -ed/-ing still nets a shorter word), so this terminates.
  for (int i = 0; i < 16; ++i) {
    auto next = step(current);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

std::unordered_set<std::string> lemma_set(std::string_view text) {
  std::unordered_set<std::string> out;
  for (const auto& w : words(text)) out.insert(lemmatize(w));
  return out;
}

}  // namespace cspun
