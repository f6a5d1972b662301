#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cspun {

/// ASCII lowercasing; bytes >= 0x80 pass through untouched.
std::string to_lower(std::string_view text);
std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool has_whitespace(std::string_view text);

/// One lowercase word, or a boundary produced by punctuation.
struct Token {
  std::string text;
  bool boundary_before = false;  // punctuation separated this from the previous token
};

/// Splits on Unicode whitespace and punctuation and lowercases. Hyphens and
/// apostrophes (including U+2019) are kept when they sit between word
/// characters; U+2019 is normalised to an ASCII apostrophe.
std::vector<Token> tokenize(std::string_view text);

/// Same as tokenize() without the boundary flags.
std::vector<std::string> words(std::string_view text);

/// 64-bit FNV-1a, used for config hashes and generation ids.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

/// Platform-independent uniform draw in [0, bound) from a 64-bit generator.
template <typename Engine>
std::uint64_t uniform_below(Engine& engine, std::uint64_t bound) {
  // Rejection sampling keeps the result identical across standard libraries,
  // unlike std::uniform_int_distribution.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t draw;
  do {
    draw = engine();
  } while (draw >= limit);
  return draw % bound;
}

}  // namespace cspun
