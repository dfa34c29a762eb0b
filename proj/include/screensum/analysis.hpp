#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "screensum/lgat.hpp"

namespace screensum {

struct PcaResult {
  std::vector<std::vector<real>> components;  // 3 orthonormal vectors, length dim
  std::vector<real> mean;
  std::array<real, 3> eigenvalues = {0, 0, 0};     // descending
  std::array<bool, 3> degenerate = {false, false, false};
  std::vector<std::array<real, 3>> projections;    // one row per input vector
};

// Mean-centered covariance eigendecomposition, top three components by
// eigenvalue. Sign convention: each component's largest-magnitude entry is
// nonnegative. Rank below three pads with zero-variance axes, flagged.
PcaResult pca_3d(const std::vector<std::vector<real>>& vectors);

// Squared reconstruction error using the first k of the three components.
real pca_reconstruction_error(const PcaResult& pca,
                              const std::vector<std::vector<real>>& vectors,
                              int k);

struct KMeansResult {
  std::vector<int> assignments;
  std::vector<std::array<real, 3>> centroids;
  std::vector<real> inertia_trace;  // one entry per Lloyd iteration
  real final_inertia = 0;
};

// k-means++ seeding, Lloyd iterations to an assignment fixpoint (at most
// 100); an emptied cluster steals the point farthest from its centroid.
KMeansResult kmeans(const std::vector<std::array<real, 3>>& points, int k,
                    uint64_t seed);

// Final-GAT-layer outputs for the character nodes only.
std::map<int, std::vector<real>> extract_character_embeddings(
    LgatModel& model, const CaDGraph& graph);

struct CharacterAnalysis {
  std::vector<int> ids;
  std::vector<std::string> names;
  std::vector<std::vector<real>> embeddings;
  PcaResult pca;
  KMeansResult clustering;
  int k = 0;
};

CharacterAnalysis analyze_characters(LgatModel& model, const CaDGraph& graph,
                                     int k, uint64_t seed);

std::string scatter_to_json(const CharacterAnalysis& analysis);
std::string scatter_to_csv(const CharacterAnalysis& analysis);

}  // namespace screensum
