#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "screensum/embed.hpp"
#include "screensum/screenplay.hpp"

namespace screensum {

// Character-aware discourse graph: scene, dialogue, and character nodes with
// four typed edge lists. Edges are stored as (id, id) pairs over the
// type-local dense ids and treated as undirected by message passing.
struct CaDGraph {
  struct SceneNode {
    int id = 0;  // scene index
    std::vector<real> embedding;
  };
  struct DialogueNode {
    int id = 0;  // dialogue index in document order
    std::vector<real> embedding;
  };
  struct CharacterNode {
    int id = 0;  // character id
    std::string name;
    std::vector<real> embedding;
  };
  using EdgeList = std::vector<std::pair<int, int>>;

  int dim = 0;
  bool trained = false;  // set when character embeddings are post-training
  std::vector<SceneNode> scenes;
  std::vector<DialogueNode> dialogues;
  std::vector<CharacterNode> characters;
  EdgeList edges_ss;  // (scene, scene), consecutive pairs
  EdgeList edges_sd;  // (scene, dialogue)
  EdgeList edges_sc;  // (scene, character)
  EdgeList edges_cd;  // (character, dialogue)

  size_t node_count() const {
    return scenes.size() + dialogues.size() + characters.size();
  }
  size_t edge_count() const {
    return edges_ss.size() + edges_sd.size() + edges_sc.size() +
           edges_cd.size();
  }
};

struct BuildOptions {
  // Scene presence is speakers plus the scene's cast list; this flag also
  // counts characters whose name occurs in the scene's action text.
  bool include_mentions = false;
  // Embed "heading description" instead of the description alone.
  bool embed_headings = false;
};

CaDGraph build_graph(const Screenplay& sp, const Embedder& embedder,
                     const BuildOptions& options = {});

// Ablation variant: drops character nodes and their incident edges, leaving
// the scene/dialogue subgraph untouched. Idempotent.
CaDGraph strip_characters(const CaDGraph& graph);

struct GraphStats {
  int scene_nodes = 0;
  int dialogue_nodes = 0;
  int character_nodes = 0;
  int ss_edges = 0;
  int sd_edges = 0;
  int sc_edges = 0;
  int cd_edges = 0;
  std::map<int, int> character_degree;  // |incident E_sc| + |incident E_cd|
};

GraphStats graph_stats(const CaDGraph& graph);
std::string stats_to_json(const GraphStats& stats);

enum class GraphFormat { json, gexf, dot };
GraphFormat graph_format_from_string(std::string_view name);

// json is the canonical round-trippable format (embeddings included);
// gexf/dot carry node type labels and omit embeddings.
std::string export_graph(const CaDGraph& graph, GraphFormat format);
CaDGraph import_graph(std::string_view bytes);

// Revalidates every structural invariant; throws SchemaViolation or
// InvariantViolation.
void validate_graph(const CaDGraph& graph);

bool graphs_equal(const CaDGraph& a, const CaDGraph& b);

}  // namespace screensum
