#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "json.hpp"
#include "screensum/ablation.hpp"
#include "screensum/summarize.hpp"
#include "test_util.hpp"

using namespace screensum;

namespace {

LgatConfig small_config() {
  LgatConfig cfg;
  cfg.arch_dim = 16;
  cfg.chunk_encoding_dim = 8;
  cfg.max_tokens = 4;
  cfg.chunk_encoder_heads = 2;
  cfg.gat_layers = 1;
  cfg.gat_heads = 2;
  cfg.gat_head_dim = 4;
  cfg.pool_heads = 2;
  cfg.fusion_heads = 2;
  cfg.decoder_layers = 1;
  cfg.decoder_heads = 2;
  cfg.decoder_ffn_dim = 16;
  cfg.max_target_len = 8;
  cfg.dropout = 0.0;
  cfg.lr = 3e-3;
  cfg.epochs = 5;
  cfg.vocab_min_freq = 1;
  cfg.seed = 3;
  cfg.embedder.dim = 6;
  return cfg;
}

Screenplay demo_screenplay() {
  return parse_xml(R"(<screenplay id="demo" title="Demo">
    <scene heading="ONE">
      <action>night rain door</action>
      <dialogue speaker="ALPHA">quiet runs</dialogue>
    </scene>
    <scene heading="TWO">
      <dialogue speaker="BRAVO">finds map home</dialogue>
    </scene>
  </screenplay>)");
}

// Embedder with hand-chosen scene vectors, keyed on scene descriptions.
class FixtureEmbedder final : public Embedder {
 public:
  explicit FixtureEmbedder(std::map<std::string, std::vector<real>> table, int dim)
      : table_(std::move(table)), dim_(dim) {}
  int dim() const override { return dim_; }
  std::vector<real> embed(std::string_view text) const override {
    auto it = table_.find(std::string(text));
    if (it != table_.end()) return it->second;
    return std::vector<real>(dim_, 0.0);
  }

 private:
  std::map<std::string, std::vector<real>> table_;
  int dim_;
};

}  // namespace

TEST_CASE("pagerank scores form a distribution") {
  std::vector<std::vector<std::pair<int, real>>> adjacency(4);
  auto link = [&adjacency](int a, int b, real w) {
    adjacency[a].emplace_back(b, w);
    adjacency[b].emplace_back(a, w);
  };
  link(0, 1, 1.0);
  link(1, 2, 0.5);
  // node 3 is isolated
  std::vector<real> scores = pagerank(adjacency);
  REQUIRE(scores.size() == 4);
  real sum = 0;
  for (real s : scores) {
    CHECK(s >= 0.0);
    sum += s;
  }
  CHECK(std::abs(sum - 1.0) < 1e-6);
}

TEST_CASE("pagerank converges on a connected triangle") {
  std::vector<std::vector<std::pair<int, real>>> adjacency(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) adjacency[i].emplace_back(j, 1.0);
  std::vector<real> scores = pagerank(adjacency);
  for (real s : scores) CHECK(s == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("extractive summarizer returns all scenes when k is large") {
  HashingEmbedder embedder(32, 0);
  Screenplay sp = demo_screenplay();
  auto scenes = summarize_extractive(sp, embedder, 10);
  REQUIRE(scenes.size() == 2);
  CHECK(scenes[0].scene_index == 0);
  CHECK(scenes[1].scene_index == 1);
}

TEST_CASE("identical twin scenes tie and the lower index wins") {
  // scenes 0 and 1 share an embedding; scene 2 is orthogonal
  std::map<std::string, std::vector<real>> table = {
      {"same text", {1, 0, 0}},
      {"other text entirely", {0, 1, 0}},
  };
  FixtureEmbedder embedder(std::move(table), 3);
  Screenplay sp = parse_xml(R"(<screenplay id="twins" title="">
    <scene heading="A"><action>same text</action></scene>
    <scene heading="B"><action>same text</action></scene>
    <scene heading="C"><action>other text entirely</action></scene>
  </screenplay>)");
  auto scenes = summarize_extractive(sp, embedder, 1);
  REQUIRE(scenes.size() == 1);
  CHECK(scenes[0].scene_index == 0);
  CHECK(scenes[0].text == "same text");
}

TEST_CASE("extractive output is an ordered subsequence with scores summing to 1") {
  Rng rng(5);
  HashingEmbedder embedder(16, 2);
  testutil::SyntheticLimits limits;
  for (int trial = 0; trial < 10; ++trial) {
    Screenplay sp =
        parse_xml(testutil::random_screenplay_xml(rng, limits, trial));
    int k = 1 + static_cast<int>(rng.uniform_int(4));
    auto scenes = summarize_extractive(sp, embedder, k);
    CHECK(scenes.size() ==
          std::min(static_cast<size_t>(k), sp.scenes.size()));
    for (size_t i = 1; i < scenes.size(); ++i)
      CHECK(scenes[i - 1].scene_index < scenes[i].scene_index);

    auto all = summarize_extractive(sp, embedder,
                                    static_cast<int>(sp.scenes.size()));
    real total = 0;
    for (const auto& scene : all) total += scene.score;
    CHECK(std::abs(total - 1.0) < 1e-6);
  }
}

TEST_CASE("extractive json lists scene index, score, and text") {
  HashingEmbedder embedder(16, 0);
  auto doc = nlohmann::json::parse(
      extractive_to_json(summarize_extractive(demo_screenplay(), embedder, 1)));
  REQUIRE(doc["scenes"].size() == 1);
  CHECK(doc["scenes"][0].contains("scene_index"));
  CHECK(doc["scenes"][0].contains("score"));
  CHECK(doc["scenes"][0].contains("text"));
}

TEST_CASE("abstractive summaries are deterministic and capped") {
  std::vector<TrainPair> corpus = {{demo_screenplay(), "quiet runs home"}};
  LgatConfig cfg = small_config();
  Vocab vocab = build_vocab(corpus, 1);
  LgatModel model(cfg, Variant::full, vocab);
  HashingEmbedder embedder(6, 0);
  train_model(model, corpus, &embedder);

  std::string first = summarize_abstractive(model, demo_screenplay(), embedder);
  std::string second = summarize_abstractive(model, demo_screenplay(), embedder);
  CHECK(first == second);
  CHECK(split_whitespace(first).size() <=
        static_cast<size_t>(cfg.max_target_len));
}

TEST_CASE("abstractive summarizer rejects a dim-mismatched embedder") {
  std::vector<TrainPair> corpus = {{demo_screenplay(), "quiet runs home"}};
  LgatConfig cfg = small_config();
  cfg.epochs = 1;
  LgatModel model(cfg, Variant::full, build_vocab(corpus, 1));
  HashingEmbedder wrong_dim(12, 0);
  try {
    summarize_abstractive(model, demo_screenplay(), wrong_dim);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigMismatch);
  }
}

TEST_CASE("overfitting one pair reproduces its summary exactly") {
  std::vector<TrainPair> corpus = {{demo_screenplay(), "quiet runs home"}};
  LgatConfig cfg = small_config();
  cfg.epochs = 150;
  cfg.lr = 1e-2;
  Vocab vocab = build_vocab(corpus, 1);
  LgatModel model(cfg, Variant::full, vocab);
  HashingEmbedder embedder(6, 0);
  TrainResult result = train_model(model, corpus, &embedder);
  CHECK(result.step_losses.back().second < 0.05);
  CHECK(summarize_abstractive(model, demo_screenplay(), embedder) ==
        "quiet runs home");
}

TEST_CASE("run_ablation produces well-formed reports for every variant") {
  std::vector<TrainPair> corpus = {{demo_screenplay(), "quiet runs home"},
                                   {demo_screenplay(), "night rain door"}};
  LgatConfig cfg = small_config();
  cfg.epochs = 2;
  for (Variant variant : {Variant::full, Variant::text_only, Variant::graph_only,
                          Variant::full_without_characters}) {
    AblationResult result = run_ablation(corpus, variant, cfg);
    CHECK(result.variant == variant);
    CHECK(result.steps == 2);
    for (const Prf* prf : {&result.report.rouge1, &result.report.rouge2,
                           &result.report.rougeL}) {
      CHECK(prf->precision >= 0.0);
      CHECK(prf->precision <= 1.0);
      CHECK(prf->recall >= 0.0);
      CHECK(prf->recall <= 1.0);
      CHECK(prf->f1 >= 0.0);
      CHECK(prf->f1 <= 1.0);
    }
    auto doc = nlohmann::json::parse(ablation_to_json(result));
    CHECK(doc["variant"] == variant_name(variant));
    CHECK(doc["report"]["rouge1"].contains("f1"));
  }
}
