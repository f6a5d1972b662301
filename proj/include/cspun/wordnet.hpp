#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cspun/corpus.hpp"
#include "cspun/keywords.hpp"

namespace cspun {

/// Strips the quoted usage examples WordNet appends to a definition:
/// `look at with fixed eyes; "The students stared at the teacher"` ->
/// `look at with fixed eyes`.
std::string definition_only(std::string_view gloss);

/// Sense-key -> definition table from a WordNet 3.x `dict/` directory
/// (index.sense plus data.{noun,verb,adj,adv}).
GlossTable gloss_table_from_wordnet(const std::filesystem::path& dict_dir);

/// Lemma -> coarse tags from index.{noun,verb,adj,adv}. Multi-word lemmas
/// keep their underscores.
PosLexicon pos_lexicon_from_wordnet(const std::filesystem::path& dict_dir);

}  // namespace cspun
