#include "cspun/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "cspun/error.hpp"
#include "cspun/text.hpp"

namespace cspun {

const char* to_string(RetrievalMethod method) {
  return method == RetrievalMethod::kClassifier ? "classifier" : "unsupervised";
}

RetrievalMethod parse_retrieval_method(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "unsupervised") return RetrievalMethod::kUnsupervised;
  if (t == "classifier" || t == "neural") return RetrievalMethod::kClassifier;
  throw Error(ErrorKind::kInvalidArgument, "unknown retrieval method '" + std::string(text) + "'",
              std::nullopt, "method");
}

namespace {

bool ranks_before(const ScoredPair& a, const ScoredPair& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.pair.pun_word != b.pair.pun_word) return a.pair.pun_word < b.pair.pun_word;
  if (a.pair.alt_word != b.pair.alt_word) return a.pair.alt_word < b.pair.alt_word;
  return a.catalog_index < b.catalog_index;
}

std::vector<std::vector<double>> embed_context(const ContextSpec& context,
                                               const EmbeddingTable& table) {
  std::vector<std::vector<double>> vectors;
  vectors.reserve(context.keywords.size());
  for (const auto& kw : context.keywords) vectors.push_back(embed_phrase(kw, table));
  return vectors;
}

double distance_to_context(const std::vector<std::vector<double>>& context_vectors,
                           const PunPair& pair, const EmbeddingTable& table) {
  const auto pun = embed_phrase(pair.pun_word, table);
  const auto alt = embed_phrase(pair.alt_word, table);
  double total = 0.0;
  for (const auto& c : context_vectors) total += euclidean(pun, c);
  for (const auto& c : context_vectors) total += euclidean(alt, c);
  return total;
}

}  // namespace

void order_and_rank(std::vector<ScoredPair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), ranks_before);
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].rank = i + 1;
}

double pair_distance(const ContextSpec& context, const PunPair& pair,
                     const EmbeddingTable& table) {
  if (context.keywords.empty())
    throw Error(ErrorKind::kInvalidArgument, "context has no keywords");
  return distance_to_context(embed_context(context, table), pair, table);
}

std::vector<ScoredPair> rank_unsupervised(const ContextSpec& context, const PairCatalog& catalog,
                                          const EmbeddingTable& table, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "k must be at least 1", std::nullopt, "k");
  if (catalog.empty()) throw Error(ErrorKind::kInvalidArgument, "catalog is empty");
  if (context.keywords.empty())
    throw Error(ErrorKind::kInvalidArgument, "context has no keywords");

  const auto context_vectors = embed_context(context, table);
  std::vector<ScoredPair> scored;
  scored.reserve(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const auto& pair = catalog.at(i);
    scored.push_back({pair, i, -distance_to_context(context_vectors, pair, table), 0,
                      RetrievalMethod::kUnsupervised});
  }
  const auto n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                    ranks_before);
  scored.resize(n);
  for (std::size_t i = 0; i < n; ++i) scored[i].rank = i + 1;
  return scored;
}

ClassifierRequest make_classifier_request(const ContextSpec& context, const PunPair& pair,
                                          bool append_glosses) {
  ClassifierRequest request{context.joined(", "), pair.pun_word + " / " + pair.alt_word};
  if (append_glosses)
    request.hypothesis += " (" + pair.pun_gloss + " / " + pair.alt_gloss + ")";
  return request;
}

RetrievalResult classify_then_rank(const ContextSpec& context, const PairCatalog& catalog,
                                   ClassifierClient& client, std::size_t k,
                                   const ClassifyOptions& options) {
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "k must be at least 1", std::nullopt, "k");

  const auto n = catalog.size();
  std::vector<std::optional<ClassifierVerdict>> verdicts(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  const auto worker = [&] {
    while (!failed.load()) {
      const auto i = next.fetch_add(1);
      if (i >= n) return;
      const auto& pair = catalog.at(i);
      try {
        const auto request = make_classifier_request(context, pair, options.append_glosses);
        verdicts[i] = with_retries(options.retry, [&] { return client.classify(request); });
      } catch (const Error& e) {
        std::lock_guard lock(error_mutex);
        if (!first_error) {
          const auto name = pair.pun_word + " / " + pair.alt_word;
          first_error = std::make_exception_ptr(
              e.kind() == ErrorKind::kBackend
                  ? Error(ErrorKind::kBackend, "malformed verdict for pair (" + name + "): " + e.what())
                  : Error(e.kind(), std::string(e.what()) + " (pair " + name + ")"));
        }
        failed = true;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };

  const auto threads = std::max<std::size_t>(1, std::min(options.parallelism, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  RetrievalResult result;
  for (std::size_t i = 0; i < n; ++i) {
    if (verdicts[i] && verdicts[i]->suitable)
      result.pairs.push_back(
          {catalog.at(i), i, verdicts[i]->confidence, 0, RetrievalMethod::kClassifier});
  }
  order_and_rank(result.pairs);
  if (result.pairs.size() > k) result.pairs.resize(k);
  result.shortfall = k - result.pairs.size();
  return result;
}

}  // namespace cspun
