#include "cspun/text.hpp"

#include <cstdio>

namespace cspun {
namespace {

enum class CharClass { kWord, kSpace, kPunct, kJoiner };

struct CodePoint {
  char32_t value;
  std::size_t length;
};

CodePoint decode_utf8(std::string_view text, std::size_t pos) {
  const auto byte = static_cast<unsigned char>(text[pos]);
  auto cont = [&](std::size_t i) -> char32_t {
    if (pos + i >= text.size()) return 0;
    return static_cast<unsigned char>(text[pos + i]) & 0x3F;
  };
  if (byte < 0x80) return {byte, 1};
  if ((byte >> 5) == 0x6 && pos + 1 < text.size())
    return {static_cast<char32_t>((byte & 0x1F) << 6) | cont(1), 2};
  if ((byte >> 4) == 0xE && pos + 2 < text.size())
    return {static_cast<char32_t>((byte & 0x0F) << 12) | (cont(1) << 6) | cont(2), 3};
  if ((byte >> 3) == 0x1E && pos + 3 < text.size())
    return {static_cast<char32_t>((byte & 0x07) << 18) | (cont(1) << 12) |
                (cont(2) << 6) | cont(3),
            4};
  // Invalid lead byte: treat as an opaque word byte.
  return {byte, 1};
}

CharClass classify(char32_t c) {
  if (c < 0x80) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
        c == '_')
      return CharClass::kWord;
    if (c == '\'' || c == '-') return CharClass::kJoiner;
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f')
      return CharClass::kSpace;
    return CharClass::kPunct;
  }
  if (c == 0x2019) return CharClass::kJoiner;
  if (c == 0x85 || c == 0xA0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200A) ||
      c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000)
    return CharClass::kSpace;
  if ((c >= 0xA1 && c <= 0xBF) || c == 0xD7 || c == 0xF7 ||
      (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
      (c >= 0x3001 && c <= 0x3003) || c == 0xFEFF)
    return CharClass::kPunct;
  return CharClass::kWord;
}

}  // namespace

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (char& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

std::string_view trim(std::string_view text) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  };
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(text.substr(start));
      return parts;
    }
    parts.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool has_whitespace(std::string_view text) {
  for (std::size_t i = 0; i < text.size();) {
    const auto cp = decode_utf8(text, i);
    if (classify(cp.value) == CharClass::kSpace) return true;
    i += cp.length;
  }
  return false;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::string current;
  std::string pending_joiner;  // joiner seen after word chars, not yet confirmed
  bool boundary = false;

  const auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back({to_lower(current), boundary});
      boundary = false;
      current.clear();
    }
  };

  for (std::size_t i = 0; i < text.size();) {
    const auto cp = decode_utf8(text, i);
    const auto cls = classify(cp.value);
    const auto bytes = text.substr(i, cp.length);
    i += cp.length;

    switch (cls) {
      case CharClass::kWord:
        if (!pending_joiner.empty()) {
          current += pending_joiner;
          pending_joiner.clear();
        }
        current += bytes;
        break;
      case CharClass::kJoiner:
        if (!current.empty() && pending_joiner.empty()) {
          pending_joiner = cp.value == 0x2019 ? "'" : std::string(bytes);
        } else {
          // Leading or doubled joiner ("--", "'quoted") acts as punctuation.
          pending_joiner.clear();
          flush();
          if (!tokens.empty()) boundary = true;
        }
        break;
      case CharClass::kSpace:
        if (!pending_joiner.empty()) {
          pending_joiner.clear();
          flush();
          if (!tokens.empty()) boundary = true;
        }
        flush();
        break;
      case CharClass::kPunct:
        pending_joiner.clear();
        flush();
        if (!tokens.empty()) boundary = true;
        break;
    }
  }
  pending_joiner.clear();
  flush();
  return tokens;
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& token : tokenize(text)) out.push_back(std::move(token.text));
  return out;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t hash = seed;
  for (const char ch : data) {
    hash ^= static_cast<unsigned char>(ch);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace cspun
