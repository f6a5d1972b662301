#include "cspun/embeddings.hpp"

#include <spdlog/spdlog.h>

#include <charconv>
#include <cmath>
#include <fstream>

#include "cspun/error.hpp"
#include "cspun/text.hpp"

namespace cspun {

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim), sum_(dim, 0.0), mean_(dim, 0.0) {
  if (dim == 0) throw Error(ErrorKind::kValidation, "embedding dimension must be positive");
}

void EmbeddingTable::add_to_mean(std::span<const float> vector) {
  if (vector.size() != dim_)
    throw Error(ErrorKind::kValidation, "vector has dimension " + std::to_string(vector.size()) +
                                            ", expected " + std::to_string(dim_));
  ++mean_count_;
  for (std::size_t i = 0; i < dim_; ++i) {
    sum_[i] += vector[i];
    mean_[i] = sum_[i] / static_cast<double>(mean_count_);
  }
}

void EmbeddingTable::add(std::string token, std::span<const float> vector) {
  add_to_mean(vector);
  if (index_.contains(token)) return;
  index_.emplace(std::move(token), data_.size() / dim_);
  data_.insert(data_.end(), vector.begin(), vector.end());
}

std::span<const float> EmbeddingTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return {};
  return std::span<const float>(data_).subspan(it->second * dim_, dim_);
}

namespace {

// Parses whitespace-separated floats; false on any malformed number.
bool parse_floats(std::string_view text, std::vector<float>& out) {
  out.clear();
  const char* p = text.data();
  const char* end = text.data() + text.size();
  while (true) {
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    if (p == end) return true;
    float value = 0.0f;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t')) return false;
    out.push_back(value);
    p = next;
  }
}

bool is_count_header(std::string_view line) {
  const auto parts = split(std::string(trim(line)), ' ');
  if (parts.size() != 2) return false;
  for (const auto& part : parts) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) return false;
  }
  return true;
}

}  // namespace

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               const EmbeddingLoadOptions& options,
                               EmbeddingLoadReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open embedding file " + path.string());

  EmbeddingLoadReport local;
  EmbeddingLoadReport& rep = report ? *report : local;
  rep = {};

  std::optional<EmbeddingTable> table;
  std::string line;
  std::vector<float> values;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++rep.lines;
    if (!table && rep.lines == 1 && is_count_header(line)) {
      rep.had_header = true;
      continue;
    }
    const auto space = line.find(' ');
    const bool ok = space != std::string::npos && space > 0 &&
                    parse_floats(std::string_view(line).substr(space + 1), values) &&
                    !values.empty();
    if (!table) {
      if (!ok)
        throw Error(ErrorKind::kParse, "first entry is not 'token v1 ... vd'", line_no);
      table.emplace(values.size());
    } else if (!ok || values.size() != table->dim()) {
      ++rep.rejected;
      continue;
    }
    auto token = line.substr(0, space);
    if (options.keep && !options.keep->contains(token)) {
      table->add_to_mean(values);
      continue;
    }
    if (table->contains(token)) {
      ++rep.duplicates;
      table->add_to_mean(values);
      continue;
    }
    table->add(std::move(token), values);
    ++rep.stored;
  }
  if (!table) throw Error(ErrorKind::kParse, "embedding file is empty: " + path.string());
  if (rep.rejected)
    spdlog::warn("embeddings: rejected {} lines with a dimension other than {}", rep.rejected,
                 table->dim());
  return std::move(*table);
}

std::vector<double> embed_phrase(std::string_view phrase, const EmbeddingTable& table) {
  std::vector<double> sum(table.dim(), 0.0);
  std::size_t found = 0;
  const auto accumulate = [&](std::string_view token) {
    const auto v = table.find(token);
    if (v.empty()) return false;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
    ++found;
    return true;
  };

  std::string normalized(phrase);
  for (char& c : normalized) {
    if (c == '_') c = ' ';
  }
  for (const auto& token : split(normalized, ' ')) {
    if (token.empty() || accumulate(token)) continue;
    if (token.find('-') != std::string::npos) {
      for (const auto& part : split(token, '-')) {
        if (!part.empty()) accumulate(part);
      }
    }
  }
  if (found == 0) return table.mean();
  for (auto& x : sum) x /= static_cast<double>(found);
  return sum;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace cspun
