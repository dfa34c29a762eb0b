#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "json.hpp"
#include "screensum/cadgraph.hpp"
#include "test_util.hpp"

using namespace screensum;

namespace {

// 3 scenes, 2 characters, 4 dialogues: ALPHA speaks twice in scene 0 and once
// in scene 1, BRAVO once in scene 2.
Screenplay three_scene_example() {
  return parse_xml(R"(<screenplay id="three" title="Three Scenes">
    <scene heading="ONE">
      <action>Opening shot.</action>
      <dialogue speaker="ALPHA">first line</dialogue>
      <dialogue speaker="ALPHA">second line</dialogue>
    </scene>
    <scene heading="TWO">
      <dialogue speaker="ALPHA">third line</dialogue>
    </scene>
    <scene heading="THREE">
      <dialogue speaker="BRAVO">fourth line</dialogue>
    </scene>
  </screenplay>)");
}

size_t count_occurrences(const std::string& text, const std::string& needle) {
  size_t count = 0, pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

}  // namespace

TEST_CASE("build_graph matches the hand-enumerated example") {
  HashingEmbedder embedder(8, 0);
  CaDGraph graph = build_graph(three_scene_example(), embedder);
  CHECK(graph.scenes.size() == 3);
  CHECK(graph.dialogues.size() == 4);
  CHECK(graph.characters.size() == 2);
  CHECK(graph.edges_ss.size() == 2);
  CHECK(graph.edges_sd.size() == 4);
  CHECK(graph.edges_sc.size() == 3);
  CHECK(graph.edges_cd.size() == 4);

  CHECK(graph.edges_ss == CaDGraph::EdgeList{{0, 1}, {1, 2}});
  CHECK(graph.edges_sd == CaDGraph::EdgeList{{0, 0}, {0, 1}, {1, 2}, {2, 3}});
  CHECK(graph.edges_sc == CaDGraph::EdgeList{{0, 0}, {1, 0}, {2, 1}});
  CHECK(graph.edges_cd == CaDGraph::EdgeList{{0, 0}, {0, 1}, {0, 2}, {1, 3}});
  validate_graph(graph);
}

TEST_CASE("single empty scene gives a single-node graph") {
  HashingEmbedder embedder(4, 0);
  Screenplay sp = parse_xml(
      R"(<screenplay id="solo" title=""><scene heading="ONLY"/></screenplay>)");
  CaDGraph graph = build_graph(sp, embedder);
  CHECK(graph.scenes.size() == 1);
  CHECK(graph.edges_ss.empty());
  CHECK(graph.edges_sd.empty());
  CHECK(graph.edges_sc.empty());
  CHECK(graph.edges_cd.empty());
  validate_graph(graph);
}

TEST_CASE("character embeddings are zero at construction") {
  HashingEmbedder embedder(6, 1);
  CaDGraph graph = build_graph(three_scene_example(), embedder);
  for (const auto& character : graph.characters) {
    REQUIRE(character.embedding.size() == 6);
    for (real v : character.embedding) CHECK(v == 0.0);
  }
  // scene/dialogue embeddings come from the embedder
  CHECK(graph.scenes[0].embedding ==
        embedder.embed(three_scene_example().scenes[0].description()));
}

TEST_CASE("build_graph rejects a lying embedder") {
  struct BrokenEmbedder final : Embedder {
    int dim() const override { return 8; }
    std::vector<real> embed(std::string_view) const override {
      return std::vector<real>(4, 0.0);
    }
  } broken;
  try {
    build_graph(three_scene_example(), broken);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmbeddingDimMismatch);
  }
}

TEST_CASE("cast attributes add scene-character edges") {
  HashingEmbedder embedder(4, 0);
  Screenplay sp = parse_xml(R"(<screenplay id="c" title="">
    <scene heading="ONE" cast="CHARLIE">
      <dialogue speaker="ALPHA">hi</dialogue>
    </scene>
  </screenplay>)");
  CaDGraph graph = build_graph(sp, embedder);
  CHECK(graph.characters.size() == 2);
  CHECK(graph.edges_sc.size() == 2);
  CHECK(graph.edges_cd.size() == 1);
  validate_graph(graph);
}

TEST_CASE("include_mentions links characters named in action text") {
  HashingEmbedder embedder(4, 0);
  Screenplay sp = parse_xml(R"(<screenplay id="m" title="">
    <scene heading="ONE">
      <dialogue speaker="ALPHA">hi</dialogue>
      <dialogue speaker="BRAVO">yo</dialogue>
    </scene>
    <scene heading="TWO">
      <action>Alpha stares through the window.</action>
      <dialogue speaker="BRAVO">gone</dialogue>
    </scene>
  </screenplay>)");
  CaDGraph without = build_graph(sp, embedder);
  CHECK(without.edges_sc.size() == 3);
  BuildOptions options;
  options.include_mentions = true;
  CaDGraph with = build_graph(sp, embedder, options);
  CHECK(with.edges_sc.size() == 4);  // ALPHA mentioned in scene 1
  validate_graph(with);
}

TEST_CASE("embed_headings folds the heading into the scene embedding") {
  HashingEmbedder embedder(16, 0);
  Screenplay sp = parse_xml(R"(<screenplay id="h" title="">
    <scene heading="INT. HOUSE"><action>a quiet room</action></scene>
  </screenplay>)");
  CaDGraph plain = build_graph(sp, embedder);
  BuildOptions options;
  options.embed_headings = true;
  CaDGraph with = build_graph(sp, embedder, options);
  CHECK(plain.scenes[0].embedding == embedder.embed("a quiet room"));
  CHECK(with.scenes[0].embedding == embedder.embed("INT. HOUSE a quiet room"));
  CHECK(plain.scenes[0].embedding != with.scenes[0].embedding);
}

TEST_CASE("mention matching requires the whole multi-word name in order") {
  HashingEmbedder embedder(4, 0);
  Screenplay sp = parse_xml(R"(<screenplay id="mw" title="">
    <scene heading="ONE">
      <dialogue speaker="MARY JANE">hello</dialogue>
    </scene>
    <scene heading="TWO">
      <action>Mary Jane slips out the back.</action>
      <dialogue speaker="BOB">gone already</dialogue>
    </scene>
    <scene heading="THREE">
      <action>Jane and then Mary arrive separately.</action>
      <dialogue speaker="BOB">still nothing</dialogue>
    </scene>
  </screenplay>)");
  BuildOptions options;
  options.include_mentions = true;
  CaDGraph graph = build_graph(sp, embedder, options);
  int mary = 0;  // first appearance
  std::set<int> mary_scenes;
  for (const auto& [scene, character] : graph.edges_sc)
    if (character == mary) mary_scenes.insert(scene);
  // spoken in scene 0, mentioned verbatim in scene 1, scrambled in scene 2
  CHECK(mary_scenes == std::set<int>{0, 1});
}

TEST_CASE("strip_characters removes exactly the character side") {
  HashingEmbedder embedder(8, 0);
  CaDGraph graph = build_graph(three_scene_example(), embedder);
  CaDGraph stripped = strip_characters(graph);
  CHECK(stripped.characters.empty());
  CHECK(stripped.edges_sc.empty());
  CHECK(stripped.edges_cd.empty());
  CHECK(stripped.edges_ss.size() == 2);
  CHECK(stripped.edges_sd.size() == 4);
  CHECK(stripped.scenes.size() == 3);
  CHECK(stripped.dialogues.size() == 4);
  validate_graph(stripped);

  // idempotent, and a fixed point on already-stripped graphs
  CHECK(graphs_equal(strip_characters(stripped), stripped));

  // scene/dialogue payloads untouched
  for (size_t i = 0; i < graph.scenes.size(); ++i)
    CHECK(graph.scenes[i].embedding == stripped.scenes[i].embedding);
  for (size_t i = 0; i < graph.dialogues.size(); ++i)
    CHECK(graph.dialogues[i].embedding == stripped.dialogues[i].embedding);
}

TEST_CASE("graph_stats counts and character degrees") {
  HashingEmbedder embedder(8, 0);
  CaDGraph graph = build_graph(three_scene_example(), embedder);
  GraphStats stats = graph_stats(graph);
  CHECK(stats.scene_nodes == 3);
  CHECK(stats.dialogue_nodes == 4);
  CHECK(stats.character_nodes == 2);
  CHECK(stats.ss_edges == 2);
  CHECK(stats.sd_edges == 4);
  CHECK(stats.sc_edges == 3);
  CHECK(stats.cd_edges == 4);
  CHECK(stats.character_degree.at(0) == 5);  // ALPHA: 2 sc + 3 cd
  CHECK(stats.character_degree.at(1) == 2);  // BRAVO: 1 sc + 1 cd

  CaDGraph empty = strip_characters(build_graph(
      parse_xml(R"(<screenplay id="e" title=""><scene heading=""/></screenplay>)"),
      embedder));
  GraphStats empty_stats = graph_stats(empty);
  CHECK(empty_stats.dialogue_nodes == 0);
  CHECK(empty_stats.sc_edges == 0);
  CHECK(empty_stats.character_degree.empty());
}

TEST_CASE("star screenplay: one character over k scenes has degree 2k") {
  const int k = 6;
  std::ostringstream xml;
  xml << "<screenplay id=\"star\" title=\"\">";
  for (int i = 0; i < k; ++i)
    xml << "<scene heading=\"S" << i
        << "\"><dialogue speaker=\"ALPHA\">line</dialogue></scene>";
  xml << "</screenplay>";
  HashingEmbedder embedder(4, 0);
  GraphStats stats = graph_stats(build_graph(parse_xml(xml.str()), embedder));
  CHECK(stats.character_degree.at(0) == 2 * k);
}

TEST_CASE("stats json carries the E_sd count") {
  HashingEmbedder embedder(8, 0);
  auto doc = nlohmann::json::parse(
      stats_to_json(graph_stats(build_graph(three_scene_example(), embedder))));
  CHECK(doc["E_sd"] == 4);
  CHECK(doc["V_c"] == 2);
  CHECK(doc["character_degree"]["0"] == 5);
}

TEST_CASE("json export round trips exactly") {
  HashingEmbedder embedder(8, 5);
  CaDGraph graph = build_graph(three_scene_example(), embedder);
  std::string bytes = export_graph(graph, GraphFormat::json);
  CaDGraph back = import_graph(bytes);
  CHECK(graphs_equal(graph, back));
  CHECK(export_graph(back, GraphFormat::json) == bytes);
}

TEST_CASE("gexf export carries 9 nodes and 13 edges for the example") {
  HashingEmbedder embedder(8, 0);
  std::string gexf =
      export_graph(build_graph(three_scene_example(), embedder), GraphFormat::gexf);
  CHECK(count_occurrences(gexf, "<node id=") == 9);
  CHECK(count_occurrences(gexf, "<edge id=") == 13);
  CHECK(gexf.find("defaultedgetype=\"undirected\"") != std::string::npos);
  CHECK(gexf.find("\"ntype\"") != std::string::npos);
  CHECK(gexf.find("value=\"character\"") != std::string::npos);
}

TEST_CASE("dot export uses undirected edge statements only") {
  HashingEmbedder embedder(8, 0);
  CaDGraph graph = build_graph(three_scene_example(), embedder);
  std::string dot = export_graph(graph, GraphFormat::dot);
  CHECK(count_occurrences(dot, " -- ") == graph.edge_count());
  CHECK(dot.find("->") == std::string::npos);
}

TEST_CASE("unsupported format name is rejected") {
  try {
    graph_format_from_string("graphml");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedFormat);
  }
}

TEST_CASE("stripped graphs round trip through the canonical format") {
  HashingEmbedder embedder(8, 0);
  CaDGraph stripped =
      strip_characters(build_graph(three_scene_example(), embedder));
  std::string bytes = export_graph(stripped, GraphFormat::json);
  CaDGraph back = import_graph(bytes);
  CHECK(graphs_equal(stripped, back));
}

TEST_CASE("import rejects a dialogue with two scene edges") {
  HashingEmbedder embedder(4, 0);
  CaDGraph graph = build_graph(three_scene_example(), embedder);
  auto doc = nlohmann::json::parse(export_graph(graph, GraphFormat::json));
  doc["edges"]["sd"].push_back({1, 0});  // dialogue 0 now sits in two scenes
  try {
    import_graph(doc.dump());
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvariantViolation);
  }
}

TEST_CASE("import rejects dim-mismatched embeddings") {
  HashingEmbedder embedder(4, 0);
  CaDGraph graph = build_graph(three_scene_example(), embedder);
  auto doc = nlohmann::json::parse(export_graph(graph, GraphFormat::json));
  doc["scenes"][0]["emb"].push_back(0.25);
  try {
    import_graph(doc.dump());
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaViolation);
  }
}

TEST_CASE("import flags nonzero character embeddings unless marked trained") {
  HashingEmbedder embedder(4, 0);
  CaDGraph graph = build_graph(three_scene_example(), embedder);
  auto doc = nlohmann::json::parse(export_graph(graph, GraphFormat::json));
  doc["characters"][0]["emb"][0] = 0.75;
  try {
    import_graph(doc.dump());
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvariantViolation);
  }
  doc["trained"] = true;
  CaDGraph trained = import_graph(doc.dump());
  CHECK(trained.characters[0].embedding[0] == 0.75);
}

TEST_CASE("import rejects a broken scene path") {
  HashingEmbedder embedder(4, 0);
  CaDGraph graph = build_graph(three_scene_example(), embedder);
  auto doc = nlohmann::json::parse(export_graph(graph, GraphFormat::json));
  doc["edges"]["ss"] = nlohmann::json::array({{0, 2}, {1, 2}});
  try {
    import_graph(doc.dump());
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvariantViolation);
  }
}

TEST_CASE("structural counts hold on random screenplays") {
  Rng rng(23);
  HashingEmbedder embedder(8, 0);
  testutil::SyntheticLimits limits;
  for (int trial = 0; trial < 25; ++trial) {
    Screenplay sp =
        parse_xml(testutil::random_screenplay_xml(rng, limits, trial));
    CaDGraph graph = build_graph(sp, embedder);
    CHECK(graph.edges_sd.size() == graph.dialogues.size());
    CHECK(graph.edges_cd.size() == graph.dialogues.size());
    CHECK(graph.edges_ss.size() ==
          (graph.scenes.empty() ? 0 : graph.scenes.size() - 1));
    CHECK(graph.edges_sc.size() <=
          graph.scenes.size() * std::max<size_t>(graph.characters.size(), 1));
    std::set<std::pair<int, int>> sc(graph.edges_sc.begin(), graph.edges_sc.end());
    CHECK(sc.size() == graph.edges_sc.size());
    validate_graph(graph);
  }
}

TEST_CASE("build_graph is deterministic down to canonical bytes") {
  Rng rng(29);
  HashingEmbedder embedder(8, 9);
  testutil::SyntheticLimits limits;
  std::string xml = testutil::random_screenplay_xml(rng, limits, 0);
  Screenplay sp = parse_xml(xml);
  std::string a = export_graph(build_graph(sp, embedder), GraphFormat::json);
  std::string b = export_graph(build_graph(sp, embedder), GraphFormat::json);
  CHECK(a == b);
}
