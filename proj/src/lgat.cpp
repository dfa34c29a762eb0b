#include "screensum/lgat.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "screensum/sha256.hpp"

namespace screensum {

using nlohmann::json;

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config) {
  if (config.kind == "hash")
    return std::make_unique<HashingEmbedder>(config.dim, config.seed);
  if (config.kind == "external") {
    auto embedder = std::make_unique<ExternalEmbedder>(
        ExternalEmbedder::load(config.path));
    if (config.dim > 0 && embedder->dim() != config.dim)
      raise(ErrorCode::DimInconsistent,
            "vector file dim " + std::to_string(embedder->dim()) +
                " != configured dim " + std::to_string(config.dim));
    return embedder;
  }
  raise(ErrorCode::InvalidArgument, "unknown embedder kind '" + config.kind + "'");
}

// --- config --------------------------------------------------------------

LgatConfig LgatConfig::desk_profile() { return LgatConfig{}; }

LgatConfig LgatConfig::paper_profile() {
  LgatConfig cfg;
  cfg.arch_dim = 4096;
  cfg.chunk_encoding_dim = 1024;
  cfg.max_tokens = 4096;
  cfg.chunk_encoder_heads = 8;
  cfg.gat_layers = 2;
  cfg.gat_heads = 4;
  cfg.gat_head_dim = 192;
  cfg.pool_heads = 8;
  cfg.fusion_heads = 8;
  cfg.decoder_layers = 6;
  cfg.decoder_heads = 8;
  cfg.decoder_ffn_dim = 8192;
  cfg.max_target_len = 2284;
  cfg.dropout = 0.15;
  cfg.lr = 1e-5;
  cfg.epochs = 20;
  cfg.embedder.dim = 768;
  return cfg;
}

void LgatConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0)
      raise(ErrorCode::InvalidArgument, std::string(name) + " must be positive");
  };
  positive(arch_dim, "arch_dim");
  positive(chunk_encoding_dim, "chunk_encoding_dim");
  positive(max_tokens, "max_tokens");
  positive(gat_layers, "gat_layers");
  positive(gat_heads, "gat_heads");
  positive(gat_head_dim, "gat_head_dim");
  positive(decoder_layers, "decoder_layers");
  positive(decoder_ffn_dim, "decoder_ffn_dim");
  positive(max_target_len, "max_target_len");
  positive(embedder.dim, "embedder.dim");
  if (dropout < 0.0 || dropout >= 1.0)
    raise(ErrorCode::InvalidArgument, "dropout must lie in [0, 1)");
  if (arch_dim % pool_heads != 0 || arch_dim % fusion_heads != 0 ||
      arch_dim % decoder_heads != 0)
    raise(ErrorCode::InvalidArgument,
          "arch_dim must be divisible by every head count");
  if (chunk_encoding_dim % chunk_encoder_heads != 0)
    raise(ErrorCode::InvalidArgument,
          "chunk_encoding_dim must be divisible by chunk_encoder_heads");
}

namespace {

json config_to_json(const LgatConfig& cfg) {
  return json{{"schema_version", 1},
              {"arch_dim", cfg.arch_dim},
              {"chunk_encoding_dim", cfg.chunk_encoding_dim},
              {"max_tokens", cfg.max_tokens},
              {"chunk_encoder_heads", cfg.chunk_encoder_heads},
              {"gat_layers", cfg.gat_layers},
              {"gat_heads", cfg.gat_heads},
              {"gat_head_dim", cfg.gat_head_dim},
              {"pool_heads", cfg.pool_heads},
              {"fusion_heads", cfg.fusion_heads},
              {"decoder_layers", cfg.decoder_layers},
              {"decoder_heads", cfg.decoder_heads},
              {"decoder_ffn_dim", cfg.decoder_ffn_dim},
              {"max_target_len", cfg.max_target_len},
              {"dropout", cfg.dropout},
              {"leaky_slope", cfg.leaky_slope},
              {"lr", cfg.lr},
              {"epochs", cfg.epochs},
              {"vocab_min_freq", cfg.vocab_min_freq},
              {"seed", cfg.seed},
              {"include_mentions", cfg.include_mentions},
              {"embed_headings", cfg.embed_headings},
              {"embedder",
               {{"kind", cfg.embedder.kind},
                {"dim", cfg.embedder.dim},
                {"seed", cfg.embedder.seed},
                {"path", cfg.embedder.path}}}};
}

void reject_unknown_keys(const json& doc) {
  static const std::set<std::string> known = {
      "schema_version", "profile",           "arch_dim",
      "chunk_encoding_dim", "max_tokens",    "chunk_encoder_heads",
      "gat_layers",     "gat_heads",         "gat_head_dim",
      "pool_heads",     "fusion_heads",      "decoder_layers",
      "decoder_heads",  "decoder_ffn_dim",   "max_target_len",
      "dropout",        "leaky_slope",       "lr",
      "epochs",         "vocab_min_freq",    "seed",
      "include_mentions", "embed_headings",  "embedder"};
  static const std::set<std::string> known_embedder = {"kind", "dim", "seed",
                                                       "path"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key))
      raise(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  }
  if (doc.contains("embedder")) {
    if (!doc["embedder"].is_object())
      raise(ErrorCode::InvalidArgument, "config \"embedder\" must be an object");
    for (const auto& [key, value] : doc["embedder"].items()) {
      if (!known_embedder.count(key))
        raise(ErrorCode::InvalidArgument,
              "unknown config key 'embedder." + key + "'");
    }
  }
}

LgatConfig config_from_json(const json& doc, LgatConfig base) {
  LgatConfig cfg = base;
  cfg.arch_dim = doc.value("arch_dim", cfg.arch_dim);
  cfg.chunk_encoding_dim = doc.value("chunk_encoding_dim", cfg.chunk_encoding_dim);
  cfg.max_tokens = doc.value("max_tokens", cfg.max_tokens);
  cfg.chunk_encoder_heads = doc.value("chunk_encoder_heads", cfg.chunk_encoder_heads);
  cfg.gat_layers = doc.value("gat_layers", cfg.gat_layers);
  cfg.gat_heads = doc.value("gat_heads", cfg.gat_heads);
  cfg.gat_head_dim = doc.value("gat_head_dim", cfg.gat_head_dim);
  cfg.pool_heads = doc.value("pool_heads", cfg.pool_heads);
  cfg.fusion_heads = doc.value("fusion_heads", cfg.fusion_heads);
  cfg.decoder_layers = doc.value("decoder_layers", cfg.decoder_layers);
  cfg.decoder_heads = doc.value("decoder_heads", cfg.decoder_heads);
  cfg.decoder_ffn_dim = doc.value("decoder_ffn_dim", cfg.decoder_ffn_dim);
  cfg.max_target_len = doc.value("max_target_len", cfg.max_target_len);
  cfg.dropout = doc.value("dropout", cfg.dropout);
  cfg.leaky_slope = doc.value("leaky_slope", cfg.leaky_slope);
  cfg.lr = doc.value("lr", cfg.lr);
  cfg.epochs = doc.value("epochs", cfg.epochs);
  cfg.vocab_min_freq = doc.value("vocab_min_freq", cfg.vocab_min_freq);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.include_mentions = doc.value("include_mentions", cfg.include_mentions);
  cfg.embed_headings = doc.value("embed_headings", cfg.embed_headings);
  if (doc.contains("embedder")) {
    const json& e = doc["embedder"];
    cfg.embedder.kind = e.value("kind", cfg.embedder.kind);
    cfg.embedder.dim = e.value("dim", cfg.embedder.dim);
    cfg.embedder.seed = e.value("seed", cfg.embedder.seed);
    cfg.embedder.path = e.value("path", cfg.embedder.path);
  }
  return cfg;
}

}  // namespace

std::string LgatConfig::to_json_string() const { return config_to_json(*this).dump(2); }

LgatConfig LgatConfig::from_json_string(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    raise(ErrorCode::SchemaViolation, "config is not a JSON object");
  reject_unknown_keys(doc);
  std::string profile = doc.value("profile", "desk");
  LgatConfig base;
  if (profile == "paper") base = paper_profile();
  else if (profile == "desk") base = desk_profile();
  else raise(ErrorCode::InvalidArgument, "unknown profile '" + profile + "'");
  LgatConfig cfg = config_from_json(doc, base);
  cfg.validate();
  return cfg;
}

std::string LgatConfig::hash() const { return sha256_hex(config_to_json(*this).dump()); }

const char* variant_name(Variant variant) {
  switch (variant) {
    case Variant::full: return "full";
    case Variant::text_only: return "text_only";
    case Variant::graph_only: return "graph_only";
    case Variant::full_without_characters: return "full_without_characters";
  }
  return "full";
}

Variant variant_from_string(std::string_view name) {
  if (name == "full") return Variant::full;
  if (name == "text_only") return Variant::text_only;
  if (name == "graph_only") return Variant::graph_only;
  if (name == "full_without_characters") return Variant::full_without_characters;
  raise(ErrorCode::InvalidArgument, "unknown variant '" + std::string(name) + "'");
}

// --- vocabulary ------------------------------------------------------------

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
        c == '\v') {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocab Vocab::build(const std::vector<std::string>& texts, int min_freq) {
  std::map<std::string, int> counts;
  std::vector<std::string> order;  // first-appearance order
  for (const auto& text : texts) {
    for (auto& token : split_whitespace(text)) {
      auto [it, inserted] = counts.emplace(std::move(token), 0);
      if (inserted) order.push_back(it->first);
      ++it->second;
    }
  }
  std::vector<std::string> tokens = {"<pad>", "<bos>", "<eos>", "<unk>"};
  for (const auto& token : order) {
    if (counts[token] >= min_freq) tokens.push_back(token);
  }
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 4 || tokens[0] != "<pad>" || tokens[1] != "<bos>" ||
      tokens[2] != "<eos>" || tokens[3] != "<unk>")
    raise(ErrorCode::SchemaViolation, "vocab must begin with the special tokens");
  Vocab vocab;
  vocab.tokens_ = std::move(tokens);
  for (size_t i = 0; i < vocab.tokens_.size(); ++i) {
    if (!vocab.index_.emplace(vocab.tokens_[i], static_cast<int>(i)).second)
      raise(ErrorCode::SchemaViolation, "duplicate vocab token " + vocab.tokens_[i]);
  }
  return vocab;
}

int Vocab::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& token : split_whitespace(text)) ids.push_back(id_of(token));
  return ids;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    if (id < 0 || id >= size())
      raise(ErrorCode::VocabularyMiss, "token id " + std::to_string(id) +
                                           " outside the vocabulary");
    if (!out.empty()) out.push_back(' ');
    out += tokens_[id];
  }
  return out;
}

std::vector<std::vector<std::string>> chunk_script(std::string_view text,
                                                   int max_tokens) {
  if (max_tokens < 1)
    raise(ErrorCode::InvalidArgument, "max_tokens must be at least 1");
  std::vector<std::string> tokens = split_whitespace(text);
  std::vector<std::vector<std::string>> chunks;
  if (tokens.empty()) {
    chunks.emplace_back();
    return chunks;
  }
  for (size_t start = 0; start < tokens.size(); start += max_tokens) {
    size_t end = std::min(tokens.size(), start + max_tokens);
    chunks.emplace_back(tokens.begin() + start, tokens.begin() + end);
  }
  return chunks;
}

// --- graph tensors -----------------------------------------------------------

Tensor adjacency_bias(const CaDGraph& graph) {
  const int ns = static_cast<int>(graph.scenes.size());
  const int nd = static_cast<int>(graph.dialogues.size());
  const int nc = static_cast<int>(graph.characters.size());
  const int n = ns + nd + nc;
  if (n == 0) raise(ErrorCode::InvalidArgument, "graph has no nodes");
  std::vector<real> bias(static_cast<size_t>(n) * n, -1e30);
  auto allow = [&bias, n](int a, int b) {
    bias[static_cast<size_t>(a) * n + b] = 0.0;
    bias[static_cast<size_t>(b) * n + a] = 0.0;
  };
  for (int i = 0; i < n; ++i) bias[static_cast<size_t>(i) * n + i] = 0.0;
  for (const auto& [a, b] : graph.edges_ss) allow(a, b);
  for (const auto& [a, b] : graph.edges_sd) allow(a, ns + b);
  for (const auto& [a, b] : graph.edges_sc) allow(a, ns + nd + b);
  for (const auto& [a, b] : graph.edges_cd) allow(ns + nd + a, ns + b);
  return Tensor::from_data({n, n}, std::move(bias));
}

Tensor node_feature_matrix(const CaDGraph& graph) {
  const int n = static_cast<int>(graph.node_count());
  if (n == 0) raise(ErrorCode::InvalidArgument, "graph has no nodes");
  std::vector<real> data;
  data.reserve(static_cast<size_t>(n) * graph.dim);
  auto push = [&data, &graph](const std::vector<real>& emb) {
    if (static_cast<int>(emb.size()) != graph.dim)
      raise(ErrorCode::ShapeMismatch, "node embedding dim differs from graph dim");
    data.insert(data.end(), emb.begin(), emb.end());
  };
  for (const auto& node : graph.scenes) push(node.embedding);
  for (const auto& node : graph.dialogues) push(node.embedding);
  for (const auto& node : graph.characters) push(node.embedding);
  return Tensor::from_data({n, graph.dim}, std::move(data));
}

// --- GAT layer -----------------------------------------------------------------

GatLayer GatLayer::init(int in_dim, int heads, int head_dim, real slope,
                        real dropout_p, Rng& rng, ParamStore& params,
                        const std::string& prefix) {
  GatLayer layer;
  layer.in_dim = in_dim;
  layer.heads = heads;
  layer.head_dim = head_dim;
  layer.slope = slope;
  layer.dropout_p = dropout_p;
  for (int h = 0; h < heads; ++h) {
    std::string head_prefix = prefix + ".head" + std::to_string(h);
    layer.weight.push_back(params.add(
        head_prefix + ".W", Tensor::xavier_uniform({in_dim, head_dim}, rng)));
    layer.attn_src.push_back(params.add(
        head_prefix + ".a_src", Tensor::xavier_uniform({head_dim, 1}, rng)));
    layer.attn_dst.push_back(params.add(
        head_prefix + ".a_dst", Tensor::xavier_uniform({head_dim, 1}, rng)));
  }
  return layer;
}

Tensor GatLayer::forward(const Tensor& x, const Tensor& adj_bias, bool train,
                         Rng* rng, std::vector<Tensor>* attn_out) const {
  const int n = x.rows();
  if (x.cols() != in_dim)
    raise(ErrorCode::ShapeMismatch,
          "gat input dim " + std::to_string(x.cols()) + " != " +
              std::to_string(in_dim));
  Tensor ones_row = Tensor::from_data({1, n}, std::vector<real>(n, 1.0));
  Tensor ones_col = Tensor::from_data({n, 1}, std::vector<real>(n, 1.0));

  std::vector<Tensor> head_outputs;
  head_outputs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Tensor projected = matmul(x, weight[h]);                 // [n, head_dim]
    Tensor src_score = matmul(projected, attn_src[h]);       // [n, 1]
    Tensor dst_score = matmul(projected, attn_dst[h]);       // [n, 1]
    // e_ij = src_i + dst_j, realized as two rank-one products
    Tensor scores = add(matmul(src_score, ones_row),
                        matmul(ones_col, transpose(dst_score)));
    scores = leaky_relu(scores, slope);
    Tensor attn = softmax_rows(add(scores, adj_bias));
    if (attn_out) attn_out->push_back(attn);
    if (train && dropout_p > 0.0 && rng) attn = dropout(attn, dropout_p, true, *rng);
    head_outputs.push_back(elu(matmul(attn, projected)));
  }
  return heads == 1 ? head_outputs[0] : concat_cols(head_outputs);
}

// --- model ----------------------------------------------------------------------

LgatModel::LgatModel(LgatConfig config, Variant variant, Vocab vocab)
    : config_(std::move(config)),
      variant_(variant),
      vocab_(std::move(vocab)),
      dropout_rng_(config_.seed + 1) {
  config_.validate();
  build_blocks();
}

void LgatModel::build_blocks() {
  Rng rng(config_.seed);
  const int a_dim = config_.arch_dim;
  const int e_dim = config_.chunk_encoding_dim;
  const int vocab_size = vocab_.size();

  int in_dim = config_.embedder.dim;
  for (int layer = 0; layer < config_.gat_layers; ++layer) {
    gat_layers_.push_back(GatLayer::init(
        in_dim, config_.gat_heads, config_.gat_head_dim, config_.leaky_slope,
        config_.dropout, rng, params_, "gat." + std::to_string(layer)));
    in_dim = config_.gat_output_dim();
  }
  graph_readout_ = Linear::init(config_.gat_output_dim(), a_dim, rng, params_,
                                "graph.readout");

  chunk_token_embed_ = params_.add(
      "chunk.token_embed", Tensor::xavier_uniform({vocab_size, e_dim}, rng));
  chunk_pos_embed_ = params_.add(
      "chunk.pos_embed", Tensor::xavier_uniform({config_.max_tokens, e_dim}, rng));
  chunk_attn_ = MultiHeadAttention::init(e_dim, config_.chunk_encoder_heads,
                                         config_.dropout, rng, params_,
                                         "chunk.attn");
  pool_input_ = Linear::init(e_dim, a_dim, rng, params_, "pool.in");
  pool_attn_ = MultiHeadAttention::init(a_dim, config_.pool_heads,
                                        config_.dropout, rng, params_,
                                        "pool.attn");
  pool_query_ = params_.add("pool.query", Tensor::xavier_uniform({1, a_dim}, rng));

  fusion_attn_ = MultiHeadAttention::init(a_dim, config_.fusion_heads,
                                          config_.dropout, rng, params_,
                                          "fusion.attn");
  fusion_collapse_ = Linear::init(2 * a_dim, a_dim, rng, params_, "fusion.collapse");
  fusion_out_ = Linear::init(a_dim, a_dim, rng, params_, "fusion.out");

  dec_token_embed_ = params_.add(
      "dec.token_embed", Tensor::xavier_uniform({vocab_size, a_dim}, rng));
  dec_pos_embed_ = params_.add(
      "dec.pos_embed",
      Tensor::xavier_uniform({config_.max_target_len, a_dim}, rng));
  for (int layer = 0; layer < config_.decoder_layers; ++layer) {
    std::string prefix = "dec.layer" + std::to_string(layer);
    DecoderLayer block{
        MultiHeadAttention::init(a_dim, config_.decoder_heads, config_.dropout,
                                 rng, params_, prefix + ".self"),
        MultiHeadAttention::init(a_dim, config_.decoder_heads, config_.dropout,
                                 rng, params_, prefix + ".cross"),
        FeedForward::init(a_dim, config_.decoder_ffn_dim, rng, params_,
                          prefix + ".ffn")};
    dec_layers_.push_back(std::move(block));
  }
  dec_out_ = Linear::init(a_dim, vocab_.size(), rng, params_, "dec.out");
}

Tensor LgatModel::gat_node_features(const CaDGraph& graph,
                                    std::vector<Tensor>* attn_out) {
  if (graph.dim != config_.embedder.dim)
    raise(ErrorCode::ConfigMismatch,
          "graph dim " + std::to_string(graph.dim) + " != model dim " +
              std::to_string(config_.embedder.dim));
  Tensor features = node_feature_matrix(graph);
  Tensor adj = adjacency_bias(graph);
  Rng* rng = train_ ? &dropout_rng_ : nullptr;
  for (const auto& layer : gat_layers_)
    features = layer.forward(features, adj, train_, rng, attn_out);
  return features;
}

Tensor LgatModel::encode_graph(const CaDGraph& graph,
                               std::vector<Tensor>* attn_out) {
  Tensor features = gat_node_features(graph, attn_out);
  return graph_readout_.forward(mean_rows(features));
}

Tensor LgatModel::encode_text(const std::vector<std::vector<std::string>>& chunks) {
  if (chunks.empty())
    raise(ErrorCode::InvalidArgument, "encode_text needs at least one chunk");
  Rng* rng = train_ ? &dropout_rng_ : nullptr;
  std::vector<Tensor> chunk_vectors;
  chunk_vectors.reserve(chunks.size());
  for (const auto& chunk : chunks) {
    if (static_cast<int>(chunk.size()) > config_.max_tokens)
      raise(ErrorCode::ShapeMismatch, "chunk exceeds max_tokens");
    if (chunk.empty()) {
      chunk_vectors.push_back(Tensor::zeros({1, config_.chunk_encoding_dim}));
      continue;
    }
    std::vector<int> ids;
    std::vector<int> positions;
    ids.reserve(chunk.size());
    for (const auto& token : chunk) {
      ids.push_back(vocab_.id_of(token));
      positions.push_back(static_cast<int>(positions.size()));
    }
    Tensor x = add(gather_rows(chunk_token_embed_, ids),
                   gather_rows(chunk_pos_embed_, positions));
    Tensor encoded = chunk_attn_.forward(x, nullptr, nullptr, train_, rng);
    chunk_vectors.push_back(mean_rows(encoded));
  }
  Tensor stacked = chunk_vectors.size() == 1 ? chunk_vectors[0]
                                             : concat_rows(chunk_vectors);
  Tensor projected = pool_input_.forward(stacked);  // [C, A]
  Tensor pooled_seq = pool_attn_.forward(projected, nullptr, nullptr, train_, rng);
  // learned-query attention over the chunk sequence
  real inv_sqrt = 1.0 / std::sqrt(static_cast<real>(config_.arch_dim));
  Tensor attn_scores =
      scale(matmul(pool_query_, transpose(pooled_seq)), inv_sqrt);  // [1, C]
  Tensor attn = softmax_rows(attn_scores);
  return matmul(attn, pooled_seq);  // [1, A]
}

Tensor LgatModel::fuse(const Tensor& graph_enc, const Tensor& text_enc) {
  if (graph_enc.cols() != config_.arch_dim || text_enc.cols() != config_.arch_dim)
    raise(ErrorCode::ShapeMismatch, "fusion inputs must have width arch_dim");
  Rng* rng = train_ ? &dropout_rng_ : nullptr;
  Tensor sequence = concat_rows({graph_enc, text_enc});  // [2, A]
  Tensor attended = fusion_attn_.forward(sequence, nullptr, nullptr, train_, rng);
  Tensor flat = reshape(attended, {1, 2 * config_.arch_dim});
  Tensor squeezed = relu(fusion_collapse_.forward(flat));
  return fusion_out_.forward(squeezed);
}

Tensor LgatModel::decoder_logits(const Tensor& memory,
                                 const std::vector<int>& input_ids) {
  const int len = static_cast<int>(input_ids.size());
  if (len == 0) raise(ErrorCode::InvalidArgument, "decoder input is empty");
  if (len > config_.max_target_len)
    raise(ErrorCode::LengthExceeded,
          "decoder input length " + std::to_string(len) + " > max " +
              std::to_string(config_.max_target_len));
  for (int id : input_ids) {
    if (id < 0 || id >= vocab_.size())
      raise(ErrorCode::VocabularyMiss,
            "token id " + std::to_string(id) + " outside the vocabulary");
  }
  Rng* rng = train_ ? &dropout_rng_ : nullptr;
  std::vector<int> positions(input_ids.size());
  for (size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);
  Tensor x = add(gather_rows(dec_token_embed_, input_ids),
                 gather_rows(dec_pos_embed_, positions));
  Tensor mask = causal_mask(len);
  for (const auto& layer : dec_layers_) {
    x = layer.self_attn.forward(x, nullptr, &mask, train_, rng);
    x = layer.cross_attn.forward(x, &memory, nullptr, train_, rng);
    x = layer.ffn.forward(x);
  }
  return dec_out_.forward(x);  // [len, V]
}

Tensor LgatModel::decode_teacher_loss(const Tensor& memory,
                                      const std::vector<int>& target_ids) {
  if (target_ids.empty())
    raise(ErrorCode::InvalidArgument, "teacher forcing needs a nonempty target");
  for (int id : target_ids) {
    if (id < 0 || id >= vocab_.size())
      raise(ErrorCode::VocabularyMiss,
            "target id " + std::to_string(id) + " outside the vocabulary");
  }
  std::vector<int> input_ids;
  input_ids.push_back(Vocab::kBos);
  input_ids.insert(input_ids.end(), target_ids.begin(), target_ids.end() - 1);
  Tensor logits = decoder_logits(memory, input_ids);
  return cross_entropy(logits, target_ids);
}

std::vector<int> LgatModel::greedy_decode(const Tensor& memory) {
  std::vector<int> ids = {Vocab::kBos};
  std::vector<int> generated;
  while (static_cast<int>(generated.size()) < config_.max_target_len) {
    Tensor logits = decoder_logits(memory, ids);
    const std::vector<real>& data = logits.data();
    const int v = vocab_.size();
    const real* row = &data[(ids.size() - 1) * static_cast<size_t>(v)];
    int best = 0;
    for (int j = 1; j < v; ++j)
      if (row[j] > row[best]) best = j;
    generated.push_back(best);
    if (best == Vocab::kEos) break;
    if (static_cast<int>(ids.size()) == config_.max_target_len) break;
    ids.push_back(best);
  }
  return generated;
}

Tensor LgatModel::memory_for(const CaDGraph* graph, const std::string& script_text) {
  switch (variant_) {
    case Variant::text_only:
      return encode_text(chunk_script(script_text, config_.max_tokens));
    case Variant::graph_only: {
      if (!graph) raise(ErrorCode::InvalidArgument, "graph_only variant needs a graph");
      return encode_graph(*graph);
    }
    case Variant::full: {
      if (!graph) raise(ErrorCode::InvalidArgument, "full variant needs a graph");
      Tensor graph_enc = encode_graph(*graph);
      Tensor text_enc = encode_text(chunk_script(script_text, config_.max_tokens));
      return fuse(graph_enc, text_enc);
    }
    case Variant::full_without_characters: {
      if (!graph)
        raise(ErrorCode::InvalidArgument,
              "full_without_characters variant needs a graph");
      CaDGraph stripped = strip_characters(*graph);
      Tensor graph_enc = encode_graph(stripped);
      Tensor text_enc = encode_text(chunk_script(script_text, config_.max_tokens));
      return fuse(graph_enc, text_enc);
    }
  }
  raise(ErrorCode::InvalidArgument, "unknown variant");
}

void LgatModel::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  json meta = {{"schema_version", 1},
               {"variant", variant_name(variant_)},
               {"config", json::parse(config_.to_json_string())}};
  write_file(dir + "/config.json", meta.dump(2));
  json vocab_doc = {{"schema_version", 1}, {"tokens", vocab_.tokens()}};
  write_file(dir + "/vocab.json", vocab_doc.dump());
  save_params(dir, params_, step_count_, config_.hash());
}

LgatModel LgatModel::load(const std::string& dir) {
  json meta = json::parse(read_file(dir + "/config.json"), nullptr, false);
  if (meta.is_discarded() || !meta.is_object())
    raise(ErrorCode::SchemaViolation, "config.json is not valid JSON");
  LgatConfig cfg = LgatConfig::from_json_string(meta.at("config").dump());
  Variant variant = variant_from_string(meta.value("variant", "full"));

  json vocab_doc = json::parse(read_file(dir + "/vocab.json"), nullptr, false);
  if (vocab_doc.is_discarded() || !vocab_doc.is_object())
    raise(ErrorCode::SchemaViolation, "vocab.json is not valid JSON");
  Vocab vocab = Vocab::from_tokens(vocab_doc.at("tokens").get<std::vector<std::string>>());

  LgatModel model(cfg, variant, std::move(vocab));
  ManifestInfo info = load_params(dir, model.params_);
  if (!info.config_hash.empty() && info.config_hash != cfg.hash())
    raise(ErrorCode::ConfigMismatch, "checkpoint config hash differs");
  model.step_count_ = info.step_count;
  return model;
}

// --- training -------------------------------------------------------------------

Vocab build_vocab(const std::vector<TrainPair>& corpus, int min_freq) {
  std::vector<std::string> texts;
  for (const auto& pair : corpus) {
    texts.push_back(pair.screenplay.full_text());
    texts.push_back(pair.summary);
  }
  return Vocab::build(texts, min_freq);
}

TrainResult train_model(LgatModel& model, const std::vector<TrainPair>& corpus,
                        const Embedder* embedder) {
  if (corpus.empty()) raise(ErrorCode::EmptyCorpus, "training corpus is empty");
  const LgatConfig& cfg = model.config();
  if (model.needs_graph() && !embedder)
    raise(ErrorCode::InvalidArgument, "this variant needs an embedder");

  struct Prepared {
    CaDGraph graph;
    bool has_graph = false;
    std::string script_text;
    std::vector<int> target_ids;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(corpus.size());
  BuildOptions build_options{cfg.include_mentions, cfg.embed_headings};
  for (const auto& pair : corpus) {
    Prepared p;
    p.script_text = pair.screenplay.full_text();
    if (model.needs_graph()) {
      p.graph = build_graph(pair.screenplay, *embedder, build_options);
      p.has_graph = true;
    }
    std::vector<int> target = model.vocab().encode(pair.summary);
    // keep room for the eos marker inside the decoder window
    if (static_cast<int>(target.size()) >= cfg.max_target_len)
      target.resize(cfg.max_target_len - 1);
    target.push_back(Vocab::kEos);
    p.target_ids = std::move(target);
    prepared.push_back(std::move(p));
  }

  AdamOptimizer adam(cfg.lr);
  TrainResult result;
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    real epoch_sum = 0.0;
    for (const auto& p : prepared) {
      model.set_train(true);
      model.params().zero_grad();
      Tensor memory =
          model.memory_for(p.has_graph ? &p.graph : nullptr, p.script_text);
      Tensor loss = model.decode_teacher_loss(memory, p.target_ids);
      real loss_value = loss.item();
      if (!std::isfinite(loss_value))
        raise(ErrorCode::NonFinite,
              "loss diverged at step " + std::to_string(step + 1));
      loss.backward();
      adam.step(model.params());
      ++step;
      result.step_losses.emplace_back(step, loss_value);
      epoch_sum += loss_value;
    }
    result.epoch_mean.push_back(epoch_sum / static_cast<real>(prepared.size()));
  }
  model.set_train(false);
  model.set_step_count(adam.step_count());
  return result;
}

std::string loss_curve_csv(const TrainResult& result) {
  std::ostringstream out;
  out << "step,loss\n";
  out << std::setprecision(17);
  for (const auto& [step, loss] : result.step_losses)
    out << step << "," << loss << "\n";
  return out.str();
}

std::vector<TrainPair> load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    raise(ErrorCode::UnreadableFile, dir + " is not a directory");
  std::vector<std::string> script_files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml")
      script_files.push_back(entry.path().string());
  }
  std::sort(script_files.begin(), script_files.end());
  if (script_files.empty())
    raise(ErrorCode::EmptyCorpus, "no .xml screenplays under " + dir);

  auto summaries = load_summaries(dir + "/summaries.jsonl");
  std::vector<TrainPair> corpus;
  for (const auto& path : script_files) {
    Screenplay sp = parse_xml(read_file(path));
    auto it = summaries.find(sp.id);
    if (it == summaries.end())
      raise(ErrorCode::MissingField,
            "no summary for screenplay '" + sp.id + "' (" + path + ")");
    corpus.push_back({std::move(sp), it->second.text});
  }
  return corpus;
}

}  // namespace screensum
