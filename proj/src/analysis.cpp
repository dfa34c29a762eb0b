#include "screensum/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace screensum {

using nlohmann::json;

namespace {

// Cyclic Jacobi eigensolver for symmetric matrices. Returns eigenvalues and
// the matching orthonormal eigenvectors as rows.
void jacobi_eigen(std::vector<std::vector<real>> a, std::vector<real>& values,
                  std::vector<std::vector<real>>& vectors) {
  const size_t n = a.size();
  vectors.assign(n, std::vector<real>(n, 0.0));
  for (size_t i = 0; i < n; ++i) vectors[i][i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    real off = 0.0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (off < 1e-24) break;
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-18) continue;
        real theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        real t = (theta >= 0 ? 1.0 : -1.0) /
                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        real c = 1.0 / std::sqrt(t * t + 1.0);
        real s = t * c;
        for (size_t i = 0; i < n; ++i) {
          real aip = a[i][p], aiq = a[i][q];
          a[i][p] = c * aip - s * aiq;
          a[i][q] = s * aip + c * aiq;
        }
        for (size_t i = 0; i < n; ++i) {
          real api = a[p][i], aqi = a[q][i];
          a[p][i] = c * api - s * aqi;
          a[q][i] = s * api + c * aqi;
        }
        for (size_t i = 0; i < n; ++i) {
          real vip = vectors[p][i], viq = vectors[q][i];
          vectors[p][i] = c * vip - s * viq;
          vectors[q][i] = s * vip + c * viq;
        }
      }
    }
  }
  values.resize(n);
  for (size_t i = 0; i < n; ++i) values[i] = a[i][i];
}

real squared_distance(const std::array<real, 3>& a, const std::array<real, 3>& b) {
  real sum = 0.0;
  for (int i = 0; i < 3; ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return sum;
}

}  // namespace

PcaResult pca_3d(const std::vector<std::vector<real>>& vectors) {
  if (vectors.size() < 3)
    raise(ErrorCode::TooFewPoints, "PCA needs at least 3 vectors");
  const size_t dim = vectors[0].size();
  if (dim < 3) raise(ErrorCode::TooFewPoints, "PCA needs vectors of dim >= 3");
  for (const auto& v : vectors) {
    if (v.size() != dim)
      raise(ErrorCode::ShapeMismatch, "PCA input vectors differ in dim");
  }
  const real n = static_cast<real>(vectors.size());

  PcaResult result;
  result.mean.assign(dim, 0.0);
  for (const auto& v : vectors)
    for (size_t j = 0; j < dim; ++j) result.mean[j] += v[j];
  for (real& m : result.mean) m /= n;

  std::vector<std::vector<real>> cov(dim, std::vector<real>(dim, 0.0));
  for (const auto& v : vectors) {
    for (size_t i = 0; i < dim; ++i) {
      real di = v[i] - result.mean[i];
      for (size_t j = i; j < dim; ++j)
        cov[i][j] += di * (v[j] - result.mean[j]);
    }
  }
  for (size_t i = 0; i < dim; ++i)
    for (size_t j = i; j < dim; ++j) {
      cov[i][j] /= n;
      cov[j][i] = cov[i][j];
    }

  std::vector<real> values;
  std::vector<std::vector<real>> rows;
  jacobi_eigen(std::move(cov), values, rows);

  std::vector<size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&values](size_t a, size_t b) { return values[a] > values[b]; });

  real max_eigen = std::max(values[order[0]], real(0));
  for (int c = 0; c < 3; ++c) {
    std::vector<real> component = rows[order[c]];
    real eigen = values[order[c]];
    // deterministic sign: largest-magnitude entry nonnegative
    size_t arg = 0;
    for (size_t j = 1; j < component.size(); ++j)
      if (std::abs(component[j]) > std::abs(component[arg])) arg = j;
    if (component[arg] < 0)
      for (real& x : component) x = -x;
    result.components.push_back(std::move(component));
    result.eigenvalues[c] = eigen;
    result.degenerate[c] = eigen <= std::max(real(1e-12), 1e-9 * max_eigen);
  }

  result.projections.reserve(vectors.size());
  for (const auto& v : vectors) {
    std::array<real, 3> projected = {0, 0, 0};
    for (int c = 0; c < 3; ++c) {
      real dot = 0.0;
      for (size_t j = 0; j < dim; ++j)
        dot += (v[j] - result.mean[j]) * result.components[c][j];
      projected[c] = dot;
    }
    result.projections.push_back(projected);
  }
  return result;
}

real pca_reconstruction_error(const PcaResult& pca,
                              const std::vector<std::vector<real>>& vectors,
                              int k) {
  if (k < 0 || k > 3) raise(ErrorCode::InvalidArgument, "k must lie in 0..3");
  const size_t dim = pca.mean.size();
  real total = 0.0;
  for (size_t p = 0; p < vectors.size(); ++p) {
    for (size_t j = 0; j < dim; ++j) {
      real centered = vectors[p][j] - pca.mean[j];
      real reconstructed = 0.0;
      for (int c = 0; c < k; ++c)
        reconstructed += pca.projections[p][c] * pca.components[c][j];
      real diff = centered - reconstructed;
      total += diff * diff;
    }
  }
  return total;
}

KMeansResult kmeans(const std::vector<std::array<real, 3>>& points, int k,
                    uint64_t seed) {
  const int n = static_cast<int>(points.size());
  if (k < 1) raise(ErrorCode::InvalidArgument, "k must be at least 1");
  if (k > n)
    raise(ErrorCode::TooFewPoints,
          "k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " points");

  Rng rng(seed);
  KMeansResult result;
  result.centroids.clear();

  // k-means++ seeding
  result.centroids.push_back(points[rng.uniform_int(n)]);
  std::vector<real> nearest(n, 0.0);
  while (static_cast<int>(result.centroids.size()) < k) {
    real total = 0.0;
    for (int i = 0; i < n; ++i) {
      real best = squared_distance(points[i], result.centroids[0]);
      for (size_t c = 1; c < result.centroids.size(); ++c)
        best = std::min(best, squared_distance(points[i], result.centroids[c]));
      nearest[i] = best;
      total += best;
    }
    int chosen;
    if (total <= 0.0) {
      chosen = static_cast<int>(rng.uniform_int(n));
    } else {
      real target = rng.uniform() * total;
      real cumulative = 0.0;
      chosen = n - 1;
      for (int i = 0; i < n; ++i) {
        cumulative += nearest[i];
        if (target < cumulative) {
          chosen = i;
          break;
        }
      }
    }
    result.centroids.push_back(points[chosen]);
  }

  result.assignments.assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    // assignment
    std::vector<int> assignment(n, 0);
    for (int i = 0; i < n; ++i) {
      real best = squared_distance(points[i], result.centroids[0]);
      int arg = 0;
      for (int c = 1; c < k; ++c) {
        real d = squared_distance(points[i], result.centroids[c]);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      assignment[i] = arg;
    }

    // repair empty clusters: steal the farthest point
    std::vector<int> cluster_size(k, 0);
    for (int a : assignment) ++cluster_size[a];
    for (int c = 0; c < k; ++c) {
      if (cluster_size[c] > 0) continue;
      int victim = -1;
      real worst = -1.0;
      for (int i = 0; i < n; ++i) {
        if (cluster_size[assignment[i]] <= 1) continue;
        real d = squared_distance(points[i], result.centroids[assignment[i]]);
        if (d > worst) {
          worst = d;
          victim = i;
        }
      }
      if (victim < 0) break;
      --cluster_size[assignment[victim]];
      assignment[victim] = c;
      ++cluster_size[c];
    }

    bool converged = (assignment == result.assignments);
    result.assignments = assignment;

    // update
    std::vector<std::array<real, 3>> sums(k, {0, 0, 0});
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      for (int d = 0; d < 3; ++d) sums[assignment[i]][d] += points[i][d];
      ++counts[assignment[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0)
        for (int d = 0; d < 3; ++d) result.centroids[c][d] = sums[c][d] / counts[c];
    }

    real inertia = 0.0;
    for (int i = 0; i < n; ++i)
      inertia += squared_distance(points[i], result.centroids[assignment[i]]);
    result.inertia_trace.push_back(inertia);
    if (converged) break;
  }
  result.final_inertia = result.inertia_trace.back();
  return result;
}

std::map<int, std::vector<real>> extract_character_embeddings(
    LgatModel& model, const CaDGraph& graph) {
  if (graph.characters.empty())
    raise(ErrorCode::NoCharacters, "the graph has no character nodes");
  model.set_train(false);
  Tensor features = model.gat_node_features(graph);
  const int offset =
      static_cast<int>(graph.scenes.size() + graph.dialogues.size());
  const int dim = features.cols();
  const std::vector<real>& data = features.data();
  std::map<int, std::vector<real>> out;
  for (const auto& character : graph.characters) {
    size_t row = static_cast<size_t>(offset) + character.id;
    out[character.id] = std::vector<real>(
        data.begin() + row * dim, data.begin() + (row + 1) * dim);
  }
  return out;
}

CharacterAnalysis analyze_characters(LgatModel& model, const CaDGraph& graph,
                                     int k, uint64_t seed) {
  CharacterAnalysis analysis;
  analysis.k = k;
  auto embeddings = extract_character_embeddings(model, graph);
  for (const auto& character : graph.characters) {
    analysis.ids.push_back(character.id);
    analysis.names.push_back(character.name);
    analysis.embeddings.push_back(embeddings.at(character.id));
  }
  analysis.pca = pca_3d(analysis.embeddings);
  analysis.clustering = kmeans(analysis.pca.projections, k, seed);
  return analysis;
}

std::string scatter_to_json(const CharacterAnalysis& analysis) {
  json points = json::array();
  for (size_t i = 0; i < analysis.ids.size(); ++i) {
    points.push_back({{"name", analysis.names[i]},
                      {"x", analysis.pca.projections[i][0]},
                      {"y", analysis.pca.projections[i][1]},
                      {"z", analysis.pca.projections[i][2]},
                      {"cluster", analysis.clustering.assignments[i]}});
  }
  json doc = {{"schema_version", 1},
              {"k", analysis.k},
              {"final_inertia", analysis.clustering.final_inertia},
              {"points", std::move(points)}};
  return doc.dump();
}

std::string scatter_to_csv(const CharacterAnalysis& analysis) {
  std::ostringstream out;
  out << "name,x,y,z,cluster\n";
  out << std::setprecision(10);
  for (size_t i = 0; i < analysis.ids.size(); ++i) {
    std::string name = analysis.names[i];
    std::replace(name.begin(), name.end(), ',', ' ');
    out << name << "," << analysis.pca.projections[i][0] << ","
        << analysis.pca.projections[i][1] << ","
        << analysis.pca.projections[i][2] << ","
        << analysis.clustering.assignments[i] << "\n";
  }
  return out.str();
}

}  // namespace screensum
