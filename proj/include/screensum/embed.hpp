#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "screensum/common.hpp"
#include "screensum/error.hpp"

namespace screensum {

// Deterministic text-to-vector contract. embed() is pure and thread-safe;
// the output dimension is fixed for the life of the embedder.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual int dim() const = 0;
  virtual std::vector<real> embed(std::string_view text) const = 0;
};

// Lowercase alphanumeric tokenization shared by the hashing embedder and the
// metric suite.
std::vector<std::string> tokenize_alnum_lower(std::string_view text);

// Signed feature hashing over lowercase alphanumeric tokens, L2-normalized.
// Identical (text, dim, seed) gives identical vectors on every platform.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(int dim = 768, uint64_t seed = 0,
                           std::map<std::string, real> idf = {});

  int dim() const override { return dim_; }
  std::vector<real> embed(std::string_view text) const override;

 private:
  int dim_;
  uint64_t seed_;
  std::map<std::string, real> idf_;
};

// Lookup embedder over externally computed vectors. Entries are keyed by
// exact text or by SHA-256 of the UTF-8 text; a query with no entry is an
// error rather than a silent fallback.
class ExternalEmbedder final : public Embedder {
 public:
  static ExternalEmbedder parse(std::string_view jsonl);
  static ExternalEmbedder load(const std::string& path);

  int dim() const override { return dim_; }
  std::vector<real> embed(std::string_view text) const override;
  size_t entry_count() const { return by_text_.size() + by_hash_.size(); }

 private:
  int dim_ = 0;
  std::map<std::string, std::vector<real>> by_text_;
  std::map<std::string, std::vector<real>> by_hash_;  // sha256 hex -> vector
};

real cosine_similarity(const std::vector<real>& a, const std::vector<real>& b);

}  // namespace screensum
