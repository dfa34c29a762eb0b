#pragma once

#include <string>
#include <vector>

#include "screensum/lgat.hpp"

namespace screensum {

// Builds the graph and text encodings per the checkpoint's variant, fuses,
// greedy-decodes, and detokenizes with single spaces.
std::string summarize_abstractive(LgatModel& model, const Screenplay& sp,
                                  const Embedder& embedder);

struct ExtractiveScene {
  int scene_index = 0;
  real score = 0;
  std::string text;
};

// TextRank-style extractive baseline: scene-similarity graph (cosine of scene
// embeddings, edges above 0.1), PageRank power iteration, top-k scenes in
// original order. Ties resolve to the lower scene index.
std::vector<ExtractiveScene> summarize_extractive(const Screenplay& sp,
                                                  const Embedder& embedder,
                                                  int k);

std::string extractive_to_json(const std::vector<ExtractiveScene>& scenes);

// Power iteration over a weighted undirected adjacency; nodes without edges
// redistribute uniformly. Scores are nonnegative and sum to 1.
std::vector<real> pagerank(const std::vector<std::vector<std::pair<int, real>>>& adjacency,
                           real damping = 0.85, real tol = 1e-8,
                           int max_iters = 200);

}  // namespace screensum
