#include "screensum/cadgraph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"

namespace screensum {

using nlohmann::json;

namespace {

// True when the character's normalized name occurs as a whole-token sequence
// in the scene description.
bool mentioned_in(const std::string& description, const std::string& name) {
  std::vector<std::string> text = tokenize_alnum_lower(description);
  std::vector<std::string> target = tokenize_alnum_lower(name);
  if (target.empty() || text.size() < target.size()) return false;
  for (size_t i = 0; i + target.size() <= text.size(); ++i) {
    bool match = true;
    for (size_t j = 0; j < target.size(); ++j) {
      if (text[i + j] != target[j]) {
        match = false;
        break;
      }
    }
    if (match) return true;
  }
  return false;
}

}  // namespace

CaDGraph build_graph(const Screenplay& sp, const Embedder& embedder,
                     const BuildOptions& options) {
  const int dim = embedder.dim();
  if (dim <= 0) raise(ErrorCode::InvalidArgument, "embedder dim must be positive");
  auto embed_checked = [&](const std::string& text) {
    std::vector<real> vec = embedder.embed(text);
    if (static_cast<int>(vec.size()) != dim)
      raise(ErrorCode::EmbeddingDimMismatch,
            "embedder returned dim " + std::to_string(vec.size()) +
                ", expected " + std::to_string(dim));
    return vec;
  };

  CaDGraph graph;
  graph.dim = dim;

  for (const auto& scene : sp.scenes) {
    std::string text = scene.description();
    if (options.embed_headings && !scene.heading.empty()) {
      text = text.empty() ? scene.heading : scene.heading + " " + text;
    }
    graph.scenes.push_back({scene.index, embed_checked(text)});
  }

  for (int k = 0; k < sp.characters.size(); ++k) {
    graph.characters.push_back(
        {k, sp.characters.name_of(k), std::vector<real>(dim, 0.0)});
  }

  for (size_t i = 0; i + 1 < sp.scenes.size(); ++i) {
    graph.edges_ss.emplace_back(static_cast<int>(i), static_cast<int>(i + 1));
  }

  int dialogue_id = 0;
  for (const auto& scene : sp.scenes) {
    std::set<int> present;
    for (const auto& name : scene.cast) {
      int id = sp.characters.id_of(name);
      if (id >= 0) present.insert(id);
    }
    for (const auto& element : scene.elements) {
      const auto* d = std::get_if<Dialogue>(&element);
      if (!d) continue;
      int speaker = sp.characters.id_of(d->speaker);
      if (speaker < 0)
        raise(ErrorCode::InvariantViolation,
              "speaker '" + d->speaker + "' missing from the registry");
      graph.dialogues.push_back({dialogue_id, embed_checked(d->text)});
      graph.edges_sd.emplace_back(scene.index, dialogue_id);
      graph.edges_cd.emplace_back(speaker, dialogue_id);
      present.insert(speaker);
      ++dialogue_id;
    }
    if (options.include_mentions) {
      const std::string description = scene.description();
      for (const auto& character : graph.characters) {
        if (present.count(character.id)) continue;
        if (mentioned_in(description, character.name)) present.insert(character.id);
      }
    }
    for (int id : present) graph.edges_sc.emplace_back(scene.index, id);
  }

  return graph;
}

CaDGraph strip_characters(const CaDGraph& graph) {
  CaDGraph out = graph;
  out.characters.clear();
  out.edges_sc.clear();
  out.edges_cd.clear();
  return out;
}

GraphStats graph_stats(const CaDGraph& graph) {
  GraphStats stats;
  stats.scene_nodes = static_cast<int>(graph.scenes.size());
  stats.dialogue_nodes = static_cast<int>(graph.dialogues.size());
  stats.character_nodes = static_cast<int>(graph.characters.size());
  stats.ss_edges = static_cast<int>(graph.edges_ss.size());
  stats.sd_edges = static_cast<int>(graph.edges_sd.size());
  stats.sc_edges = static_cast<int>(graph.edges_sc.size());
  stats.cd_edges = static_cast<int>(graph.edges_cd.size());
  for (const auto& character : graph.characters)
    stats.character_degree[character.id] = 0;
  for (const auto& [scene, character] : graph.edges_sc)
    ++stats.character_degree[character];
  for (const auto& [character, dialogue] : graph.edges_cd)
    ++stats.character_degree[character];
  return stats;
}

std::string stats_to_json(const GraphStats& stats) {
  json degrees = json::object();
  for (const auto& [id, degree] : stats.character_degree)
    degrees[std::to_string(id)] = degree;
  json doc = {{"schema_version", 1},
              {"V_s", stats.scene_nodes},
              {"V_d", stats.dialogue_nodes},
              {"V_c", stats.character_nodes},
              {"E_ss", stats.ss_edges},
              {"E_sd", stats.sd_edges},
              {"E_sc", stats.sc_edges},
              {"E_cd", stats.cd_edges},
              {"character_degree", std::move(degrees)}};
  return doc.dump();
}

GraphFormat graph_format_from_string(std::string_view name) {
  if (name == "json") return GraphFormat::json;
  if (name == "gexf") return GraphFormat::gexf;
  if (name == "dot") return GraphFormat::dot;
  raise(ErrorCode::UnsupportedFormat, "unsupported format '" + std::string(name) + "'");
}

namespace {

json edges_to_json(const CaDGraph::EdgeList& edges) {
  json out = json::array();
  for (const auto& [a, b] : edges) out.push_back(json::array({a, b}));
  return out;
}

std::string export_json(const CaDGraph& graph) {
  json scenes = json::array();
  for (const auto& node : graph.scenes)
    scenes.push_back({{"id", node.id}, {"emb", node.embedding}});
  json dialogues = json::array();
  for (const auto& node : graph.dialogues)
    dialogues.push_back({{"id", node.id}, {"emb", node.embedding}});
  json characters = json::array();
  for (const auto& node : graph.characters)
    characters.push_back(
        {{"id", node.id}, {"name", node.name}, {"emb", node.embedding}});
  json doc = {{"schema_version", 1},
              {"dim", graph.dim},
              {"trained", graph.trained},
              {"scenes", std::move(scenes)},
              {"dialogues", std::move(dialogues)},
              {"characters", std::move(characters)},
              {"edges",
               {{"ss", edges_to_json(graph.edges_ss)},
                {"sd", edges_to_json(graph.edges_sd)},
                {"sc", edges_to_json(graph.edges_sc)},
                {"cd", edges_to_json(graph.edges_cd)}}}};
  return doc.dump();
}

std::string xml_attr_escape(const std::string& raw) {
  std::string out;
  for (char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string export_gexf(const CaDGraph& graph) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<gexf xmlns=\"http://www.gexf.net/1.2draft\" version=\"1.2\">\n"
      << "  <graph defaultedgetype=\"undirected\">\n"
      << "    <attributes class=\"node\">\n"
      << "      <attribute id=\"0\" title=\"ntype\" type=\"string\"/>\n"
      << "    </attributes>\n"
      << "    <nodes>\n";
  auto node = [&out](const std::string& id, const std::string& label,
                     const char* ntype) {
    out << "      <node id=\"" << id << "\" label=\"" << xml_attr_escape(label)
        << "\">\n"
        << "        <attvalues><attvalue for=\"0\" value=\"" << ntype
        << "\"/></attvalues>\n"
        << "      </node>\n";
  };
  for (const auto& n : graph.scenes)
    node("s" + std::to_string(n.id), "scene " + std::to_string(n.id), "scene");
  for (const auto& n : graph.dialogues)
    node("d" + std::to_string(n.id), "dialogue " + std::to_string(n.id),
         "dialogue");
  for (const auto& n : graph.characters)
    node("c" + std::to_string(n.id), n.name, "character");
  out << "    </nodes>\n    <edges>\n";
  int edge_id = 0;
  auto edge = [&out, &edge_id](char a, int src, char b, int dst) {
    out << "      <edge id=\"" << edge_id++ << "\" source=\"" << a << src
        << "\" target=\"" << b << dst << "\"/>\n";
  };
  for (const auto& [a, b] : graph.edges_ss) edge('s', a, 's', b);
  for (const auto& [a, b] : graph.edges_sd) edge('s', a, 'd', b);
  for (const auto& [a, b] : graph.edges_sc) edge('s', a, 'c', b);
  for (const auto& [a, b] : graph.edges_cd) edge('c', a, 'd', b);
  out << "    </edges>\n  </graph>\n</gexf>\n";
  return out.str();
}

std::string dot_label_escape(const std::string& raw) {
  std::string out;
  for (char c : raw) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string export_dot(const CaDGraph& graph) {
  std::ostringstream out;
  out << "graph cadgraph {\n";
  for (const auto& n : graph.scenes)
    out << "  s" << n.id << " [label=\"scene " << n.id << "\" ntype=\"scene\"];\n";
  for (const auto& n : graph.dialogues)
    out << "  d" << n.id << " [label=\"dialogue " << n.id
        << "\" ntype=\"dialogue\"];\n";
  for (const auto& n : graph.characters)
    out << "  c" << n.id << " [label=\"" << dot_label_escape(n.name)
        << "\" ntype=\"character\"];\n";
  for (const auto& [a, b] : graph.edges_ss) out << "  s" << a << " -- s" << b << ";\n";
  for (const auto& [a, b] : graph.edges_sd) out << "  s" << a << " -- d" << b << ";\n";
  for (const auto& [a, b] : graph.edges_sc) out << "  s" << a << " -- c" << b << ";\n";
  for (const auto& [a, b] : graph.edges_cd) out << "  c" << a << " -- d" << b << ";\n";
  out << "}\n";
  return out.str();
}

CaDGraph::EdgeList edges_from_json(const json& arr) {
  CaDGraph::EdgeList edges;
  for (const auto& pair : arr) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
        !pair[1].is_number_integer())
      raise(ErrorCode::SchemaViolation, "edge entries must be [int, int]");
    edges.emplace_back(pair[0].get<int>(), pair[1].get<int>());
  }
  return edges;
}

}  // namespace

std::string export_graph(const CaDGraph& graph, GraphFormat format) {
  switch (format) {
    case GraphFormat::json: return export_json(graph);
    case GraphFormat::gexf: return export_gexf(graph);
    case GraphFormat::dot: return export_dot(graph);
  }
  raise(ErrorCode::UnsupportedFormat, "unsupported format");
}

CaDGraph import_graph(std::string_view bytes) {
  json doc = json::parse(bytes, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    raise(ErrorCode::SchemaViolation, "graph JSON is not an object");

  CaDGraph graph;
  try {
    if (!doc.contains("dim") || !doc["dim"].is_number_integer())
      raise(ErrorCode::SchemaViolation, "graph JSON lacks \"dim\"");
    graph.dim = doc["dim"].get<int>();
    graph.trained = doc.value("trained", false);

    auto load_embedding = [&graph](const json& node) {
      if (!node.contains("emb") || !node["emb"].is_array())
        raise(ErrorCode::SchemaViolation, "node lacks \"emb\"");
      std::vector<real> emb;
      for (const auto& v : node["emb"]) emb.push_back(v.get<real>());
      if (static_cast<int>(emb.size()) != graph.dim)
        raise(ErrorCode::SchemaViolation,
              "embedding dim " + std::to_string(emb.size()) + " != " +
                  std::to_string(graph.dim));
      return emb;
    };

    for (const auto& node : doc.value("scenes", json::array()))
      graph.scenes.push_back({node.at("id").get<int>(), load_embedding(node)});
    for (const auto& node : doc.value("dialogues", json::array()))
      graph.dialogues.push_back({node.at("id").get<int>(), load_embedding(node)});
    for (const auto& node : doc.value("characters", json::array()))
      graph.characters.push_back({node.at("id").get<int>(),
                                  node.value("name", ""), load_embedding(node)});

    if (!doc.contains("edges") || !doc["edges"].is_object())
      raise(ErrorCode::SchemaViolation, "graph JSON lacks \"edges\"");
    const json& edges = doc["edges"];
    graph.edges_ss = edges_from_json(edges.value("ss", json::array()));
    graph.edges_sd = edges_from_json(edges.value("sd", json::array()));
    graph.edges_sc = edges_from_json(edges.value("sc", json::array()));
    graph.edges_cd = edges_from_json(edges.value("cd", json::array()));
  } catch (const json::exception& e) {
    raise(ErrorCode::SchemaViolation, std::string("graph JSON: ") + e.what());
  }

  validate_graph(graph);
  return graph;
}

void validate_graph(const CaDGraph& graph) {
  if (graph.dim <= 0)
    raise(ErrorCode::SchemaViolation, "graph dim must be positive");

  // Dense contiguous ids per node type.
  for (size_t i = 0; i < graph.scenes.size(); ++i)
    if (graph.scenes[i].id != static_cast<int>(i))
      raise(ErrorCode::SchemaViolation, "scene ids must be 0..n-1 in order");
  for (size_t i = 0; i < graph.dialogues.size(); ++i)
    if (graph.dialogues[i].id != static_cast<int>(i))
      raise(ErrorCode::SchemaViolation, "dialogue ids must be 0..n-1 in order");
  for (size_t i = 0; i < graph.characters.size(); ++i)
    if (graph.characters[i].id != static_cast<int>(i))
      raise(ErrorCode::SchemaViolation, "character ids must be 0..n-1 in order");

  const int ns = static_cast<int>(graph.scenes.size());
  const int nd = static_cast<int>(graph.dialogues.size());
  const int nc = static_cast<int>(graph.characters.size());

  auto check_refs = [](const CaDGraph::EdgeList& edges, int limit_a, int limit_b,
                       const char* label) {
    for (const auto& [a, b] : edges) {
      if (a < 0 || a >= limit_a || b < 0 || b >= limit_b)
        raise(ErrorCode::SchemaViolation,
              std::string(label) + " edge references a missing node");
    }
  };
  check_refs(graph.edges_ss, ns, ns, "ss");
  check_refs(graph.edges_sd, ns, nd, "sd");
  check_refs(graph.edges_sc, ns, nc, "sc");
  check_refs(graph.edges_cd, nc, nd, "cd");

  // Character embeddings are all-zero unless marked post-training.
  if (!graph.trained) {
    for (const auto& character : graph.characters) {
      for (real v : character.embedding) {
        if (v != 0.0)
          raise(ErrorCode::InvariantViolation,
                "character " + std::to_string(character.id) +
                    " has a nonzero embedding in an untrained graph");
      }
    }
  }

  // Scene path: consecutive pairs in order.
  if (static_cast<int>(graph.edges_ss.size()) != std::max(ns - 1, 0))
    raise(ErrorCode::InvariantViolation, "scene path edge count is wrong");
  CaDGraph::EdgeList sorted_ss = graph.edges_ss;
  std::sort(sorted_ss.begin(), sorted_ss.end());
  for (size_t i = 0; i < sorted_ss.size(); ++i) {
    if (sorted_ss[i] != std::make_pair(static_cast<int>(i), static_cast<int>(i) + 1))
      raise(ErrorCode::InvariantViolation, "scene path must chain consecutive scenes");
  }

  // Every dialogue sits in exactly one scene.
  std::vector<int> sd_count(nd, 0);
  for (const auto& [scene, dialogue] : graph.edges_sd) ++sd_count[dialogue];
  for (int j = 0; j < nd; ++j) {
    if (sd_count[j] != 1)
      raise(ErrorCode::InvariantViolation,
            "dialogue " + std::to_string(j) + " has " +
                std::to_string(sd_count[j]) + " scene edges");
  }

  // Every dialogue has exactly one speaker, except in character-stripped
  // graphs where the cd list is empty.
  if (nc == 0) {
    if (!graph.edges_cd.empty() || !graph.edges_sc.empty())
      raise(ErrorCode::InvariantViolation,
            "character edges present without character nodes");
  } else {
    std::vector<int> cd_count(nd, 0);
    for (const auto& [character, dialogue] : graph.edges_cd) ++cd_count[dialogue];
    for (int j = 0; j < nd; ++j) {
      if (cd_count[j] != 1)
        raise(ErrorCode::InvariantViolation,
              "dialogue " + std::to_string(j) + " has " +
                  std::to_string(cd_count[j]) + " speaker edges");
    }
  }

  // No duplicate (scene, character) pairs; no self-loops by construction.
  std::set<std::pair<int, int>> sc_seen;
  for (const auto& edge : graph.edges_sc) {
    if (!sc_seen.insert(edge).second)
      raise(ErrorCode::InvariantViolation, "duplicate scene-character edge");
  }
}

bool graphs_equal(const CaDGraph& a, const CaDGraph& b) {
  auto scenes_equal = [](const auto& x, const auto& y) {
    return x.id == y.id && x.embedding == y.embedding;
  };
  if (a.dim != b.dim || a.trained != b.trained) return false;
  if (a.scenes.size() != b.scenes.size() ||
      a.dialogues.size() != b.dialogues.size() ||
      a.characters.size() != b.characters.size())
    return false;
  for (size_t i = 0; i < a.scenes.size(); ++i)
    if (!scenes_equal(a.scenes[i], b.scenes[i])) return false;
  for (size_t i = 0; i < a.dialogues.size(); ++i)
    if (!scenes_equal(a.dialogues[i], b.dialogues[i])) return false;
  for (size_t i = 0; i < a.characters.size(); ++i) {
    if (a.characters[i].id != b.characters[i].id ||
        a.characters[i].name != b.characters[i].name ||
        a.characters[i].embedding != b.characters[i].embedding)
      return false;
  }
  return a.edges_ss == b.edges_ss && a.edges_sd == b.edges_sd &&
         a.edges_sc == b.edges_sc && a.edges_cd == b.edges_cd;
}

}  // namespace screensum
