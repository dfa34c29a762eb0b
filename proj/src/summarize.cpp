#include "screensum/summarize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace screensum {

using nlohmann::json;

std::string summarize_abstractive(LgatModel& model, const Screenplay& sp,
                                  const Embedder& embedder) {
  if (embedder.dim() != model.config().embedder.dim)
    raise(ErrorCode::ConfigMismatch,
          "embedder dim " + std::to_string(embedder.dim()) +
              " != checkpoint dim " +
              std::to_string(model.config().embedder.dim));
  model.set_train(false);
  CaDGraph graph;
  const CaDGraph* graph_ptr = nullptr;
  if (model.needs_graph()) {
    BuildOptions options{model.config().include_mentions,
                         model.config().embed_headings};
    graph = build_graph(sp, embedder, options);
    graph_ptr = &graph;
  }
  Tensor memory = model.memory_for(graph_ptr, sp.full_text());
  return model.vocab().decode(model.greedy_decode(memory));
}

std::vector<real> pagerank(
    const std::vector<std::vector<std::pair<int, real>>>& adjacency,
    real damping, real tol, int max_iters) {
  const size_t n = adjacency.size();
  if (n == 0) return {};
  std::vector<real> weight_sum(n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (const auto& [j, w] : adjacency[i]) weight_sum[i] += w;

  std::vector<real> score(n, 1.0 / static_cast<real>(n));
  std::vector<real> next(n, 0.0);
  for (int iter = 0; iter < max_iters; ++iter) {
    real dangling = 0.0;
    std::fill(next.begin(), next.end(), 0.0);
    for (size_t i = 0; i < n; ++i) {
      if (weight_sum[i] == 0.0) {
        dangling += score[i];
        continue;
      }
      for (const auto& [j, w] : adjacency[i])
        next[j] += score[i] * w / weight_sum[i];
    }
    real base = (1.0 - damping) / static_cast<real>(n) +
                damping * dangling / static_cast<real>(n);
    real delta = 0.0;
    for (size_t i = 0; i < n; ++i) {
      next[i] = base + damping * next[i];
      delta += std::abs(next[i] - score[i]);
    }
    score.swap(next);
    if (delta < tol) break;
  }
  return score;
}

std::vector<ExtractiveScene> summarize_extractive(const Screenplay& sp,
                                                  const Embedder& embedder,
                                                  int k) {
  if (k < 1) raise(ErrorCode::InvalidArgument, "scene budget must be at least 1");
  const size_t n = sp.scenes.size();
  std::vector<std::vector<real>> embeddings;
  embeddings.reserve(n);
  for (const auto& scene : sp.scenes)
    embeddings.push_back(embedder.embed(scene.description()));

  constexpr real kSimilarityThreshold = 0.1;
  std::vector<std::vector<std::pair<int, real>>> adjacency(n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      real sim = cosine_similarity(embeddings[i], embeddings[j]);
      if (sim > kSimilarityThreshold) {
        adjacency[i].emplace_back(static_cast<int>(j), sim);
        adjacency[j].emplace_back(static_cast<int>(i), sim);
      }
    }
  }

  std::vector<real> scores = pagerank(adjacency);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&scores](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  size_t budget = std::min(static_cast<size_t>(k), n);
  std::vector<int> selected(order.begin(), order.begin() + budget);
  std::sort(selected.begin(), selected.end());

  std::vector<ExtractiveScene> result;
  result.reserve(selected.size());
  for (int index : selected) {
    const Scene& scene = sp.scenes[index];
    std::string text = scene.description();
    if (text.empty()) text = scene.heading;
    result.push_back({index, scores[index], std::move(text)});
  }
  return result;
}

std::string extractive_to_json(const std::vector<ExtractiveScene>& scenes) {
  json items = json::array();
  for (const auto& scene : scenes)
    items.push_back({{"scene_index", scene.scene_index},
                     {"score", scene.score},
                     {"text", scene.text}});
  json doc = {{"schema_version", 1}, {"scenes", std::move(items)}};
  return doc.dump();
}

}  // namespace screensum
