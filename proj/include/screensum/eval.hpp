#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "screensum/embed.hpp"

namespace screensum {

struct Prf {
  real precision = 0;
  real recall = 0;
  real f1 = 0;
};

real f1_of(real precision, real recall);

// Clipped n-gram overlap over lowercase alphanumeric tokens.
Prf rouge_n(std::string_view candidate, std::string_view reference, int n);

// Token-level longest common subsequence.
Prf rouge_l(std::string_view candidate, std::string_view reference);

// Greedy-matching cosine-similarity precision/recall/F1 over per-token
// embeddings; zero-vector tokens contribute similarity 0.
Prf embed_score(std::string_view candidate, std::string_view reference,
                const Embedder& embedder);

struct EvalReport {
  Prf rouge1, rouge2, rougeL, embed;
  size_t candidate_tokens = 0;
  size_t reference_tokens = 0;
};

EvalReport evaluate_pair(std::string_view candidate, std::string_view reference,
                         const Embedder& embedder);

std::string report_to_json(const EvalReport& report);

// One CSV row per (label, report); the header names every metric column.
std::string reports_to_csv(
    const std::vector<std::pair<std::string, EvalReport>>& rows);

struct NoveltyReport {
  std::array<real, 4> novel_pct = {0, 0, 0, 0};  // n = 1..4, percent
};

// Fraction of distinct summary n-grams absent from the script, per n in 1..4.
NoveltyReport ngram_novelty(std::string_view summary, std::string_view script);

std::string novelty_to_json(const NoveltyReport& report);

}  // namespace screensum
