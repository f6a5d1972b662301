#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cspun {

/// Token -> dense vector. Vectors are stored as float; arithmetic on them is
/// done in double. The fallback vector for out-of-vocabulary words is the
/// per-dimension mean of every vector that was read, including vectors
/// dropped by a load-time vocabulary filter.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return index_.size(); }

  /// Stores `vector` under `token` (first insertion wins) and folds it into
  /// the mean. Throws Error(kValidation) on a dimension mismatch.
  void add(std::string token, std::span<const float> vector);
  /// Folds `vector` into the mean without storing it.
  void add_to_mean(std::span<const float> vector);

  /// Empty span for unknown tokens.
  std::span<const float> find(std::string_view token) const;
  bool contains(std::string_view token) const { return !find(token).empty(); }

  const std::vector<double>& mean() const { return mean_; }
  std::size_t mean_count() const { return mean_count_; }

 private:
  std::size_t dim_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> sum_;
  std::vector<double> mean_;
  std::size_t mean_count_ = 0;
};

struct EmbeddingLoadOptions {
  /// When set, only these tokens are stored (everything still feeds the mean).
  std::optional<std::unordered_set<std::string>> keep;
};

struct EmbeddingLoadReport {
  std::size_t lines = 0;
  std::size_t stored = 0;
  std::size_t rejected = 0;   // wrong dimension or unparsable numbers
  std::size_t duplicates = 0;
  bool had_header = false;    // word2vec-style "count dim" first line
};

/// Text format, one entry per line: `token v1 v2 ... vd`. The dimension is
/// taken from the first line; deviating lines are skipped and counted.
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               const EmbeddingLoadOptions& options = {},
                               EmbeddingLoadReport* report = nullptr);

/// Vector for a phrase: mean of the in-vocabulary token vectors, the table
/// mean when no token is known. Tokens are split on ' ', '_' and, when the
/// whole token is unknown, on '-'.
std::vector<double> embed_phrase(std::string_view phrase, const EmbeddingTable& table);

double euclidean(std::span<const double> a, std::span<const double> b);

}  // namespace cspun
