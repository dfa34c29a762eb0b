#include "screensum/embed.hpp"

#include <cctype>
#include <cmath>

#include "json.hpp"
#include "screensum/screenplay.hpp"
#include "screensum/sha256.hpp"

namespace screensum {

using nlohmann::json;

std::vector<std::string> tokenize_alnum_lower(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace {

// FNV-1a, seeded. Pure integer math keeps results identical across platforms.
uint64_t fnv1a(std::string_view token, uint64_t seed) {
  uint64_t h = 14695981039346656037ull ^ seed;
  for (char c : token) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

HashingEmbedder::HashingEmbedder(int dim, uint64_t seed,
                                 std::map<std::string, real> idf)
    : dim_(dim), seed_(seed), idf_(std::move(idf)) {
  if (dim <= 0) raise(ErrorCode::InvalidArgument, "embedder dim must be positive");
}

std::vector<real> HashingEmbedder::embed(std::string_view text) const {
  std::vector<real> vec(dim_, 0.0);
  for (const auto& token : tokenize_alnum_lower(text)) {
    uint64_t h = fnv1a(token, seed_);
    size_t bucket = static_cast<size_t>(h % static_cast<uint64_t>(dim_));
    real sign = ((h >> 57) & 1) ? 1.0 : -1.0;
    real weight = 1.0;
    if (!idf_.empty()) {
      auto it = idf_.find(token);
      if (it != idf_.end()) weight = it->second;
    }
    vec[bucket] += sign * weight;
  }
  real norm_sq = 0.0;
  for (real v : vec) norm_sq += v * v;
  if (norm_sq > 0.0) {
    real inv = 1.0 / std::sqrt(norm_sq);
    for (real& v : vec) v *= inv;
  }
  return vec;
}

ExternalEmbedder ExternalEmbedder::parse(std::string_view jsonl) {
  ExternalEmbedder embedder;
  size_t start = 0;
  int line_no = 0;
  while (start <= jsonl.size()) {
    size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (normalize_whitespace(line).empty()) continue;

    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object())
      raise(ErrorCode::UnreadableFile,
            "vector file line " + std::to_string(line_no) + ": not a JSON object");
    if (!record.contains("vec") || !record["vec"].is_array())
      raise(ErrorCode::UnreadableFile,
            "vector file line " + std::to_string(line_no) + ": missing \"vec\"");
    std::vector<real> vec;
    for (const auto& v : record["vec"]) {
      if (!v.is_number())
        raise(ErrorCode::UnreadableFile,
              "vector file line " + std::to_string(line_no) + ": non-numeric entry");
      vec.push_back(v.get<real>());
    }
    if (vec.empty())
      raise(ErrorCode::UnreadableFile,
            "vector file line " + std::to_string(line_no) + ": empty vector");
    if (embedder.dim_ == 0) embedder.dim_ = static_cast<int>(vec.size());
    if (static_cast<int>(vec.size()) != embedder.dim_)
      raise(ErrorCode::DimInconsistent,
            "vector file line " + std::to_string(line_no) + ": dim " +
                std::to_string(vec.size()) + " != " + std::to_string(embedder.dim_));

    if (record.contains("text") && record["text"].is_string()) {
      embedder.by_text_[record["text"].get<std::string>()] = std::move(vec);
    } else if (record.contains("hash") && record["hash"].is_string()) {
      embedder.by_hash_[record["hash"].get<std::string>()] = std::move(vec);
    } else {
      raise(ErrorCode::UnreadableFile,
            "vector file line " + std::to_string(line_no) +
                ": needs \"text\" or \"hash\"");
    }
  }
  if (embedder.dim_ == 0)
    raise(ErrorCode::UnreadableFile, "vector file holds no entries");
  return embedder;
}

ExternalEmbedder ExternalEmbedder::load(const std::string& path) {
  return parse(read_file(path));
}

std::vector<real> ExternalEmbedder::embed(std::string_view text) const {
  std::string key(text);
  if (auto it = by_text_.find(key); it != by_text_.end()) return it->second;
  if (!by_hash_.empty()) {
    if (auto it = by_hash_.find(sha256_hex(text)); it != by_hash_.end())
      return it->second;
  }
  std::string preview = key.substr(0, 60);
  raise(ErrorCode::MissingText, "no vector for text '" + preview + "'");
}

real cosine_similarity(const std::vector<real>& a, const std::vector<real>& b) {
  if (a.size() != b.size())
    raise(ErrorCode::ShapeMismatch, "cosine over mismatched dims");
  real dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace screensum
