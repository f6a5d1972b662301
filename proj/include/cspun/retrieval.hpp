#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cspun/backend.hpp"
#include "cspun/corpus.hpp"
#include "cspun/embeddings.hpp"
#include "cspun/types.hpp"

namespace cspun {

enum class RetrievalMethod { kUnsupervised, kClassifier };

const char* to_string(RetrievalMethod method);
RetrievalMethod parse_retrieval_method(std::string_view text);

struct ScoredPair {
  PunPair pair;
  std::size_t catalog_index = 0;
  double score = 0.0;  // higher is more suitable
  std::size_t rank = 0;  // 1-based
  RetrievalMethod method = RetrievalMethod::kUnsupervised;
};

struct RetrievalResult {
  std::vector<ScoredPair> pairs;
  std::size_t shortfall = 0;  // k minus the number of pairs returned
};

/// Embedding-distance suitability of a pair for a context:
///   sum_i |p_w - c_i| + sum_i |a_w - c_i|
/// A homographic pair contributes the same distance through both sums.
double pair_distance(const ContextSpec& context, const PunPair& pair,
                     const EmbeddingTable& table);

/// Ranks the catalog by ascending pair_distance (score = -distance); equal
/// scores fall back to (pun_word, alt_word, catalog index) order.
std::vector<ScoredPair> rank_unsupervised(const ContextSpec& context, const PairCatalog& catalog,
                                          const EmbeddingTable& table, std::size_t k);

struct ClassifyOptions {
  std::size_t parallelism = 4;
  bool append_glosses = false;  // hypothesis "p / a (pun gloss / alt gloss)"
  RetryPolicy retry;
};

/// Premise: keywords joined by ", ". Hypothesis: "pun_word / alt_word".
ClassifierRequest make_classifier_request(const ContextSpec& context, const PunPair& pair,
                                          bool append_glosses = false);

/// Asks the classifier about every catalog pair, keeps the ones labelled
/// suitable and ranks them by confidence (ties as in rank_unsupervised).
/// Returns at most k pairs and reports the shortfall when fewer qualify.
RetrievalResult classify_then_rank(const ContextSpec& context, const PairCatalog& catalog,
                                   ClassifierClient& client, std::size_t k,
                                   const ClassifyOptions& options = {});

/// Orders by score descending with the lexicographic tie-break, then
/// assigns ranks 1..n. Shared by both retrieval paths.
void order_and_rank(std::vector<ScoredPair>& pairs);

}  // namespace cspun
