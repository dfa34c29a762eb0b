#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "screensum/cadgraph.hpp"
#include "screensum/nn.hpp"
#include "screensum/tensor.hpp"

namespace screensum {

struct EmbedderConfig {
  std::string kind = "hash";  // hash | external
  int dim = 64;
  uint64_t seed = 0;
  std::string path;  // vector file for kind == external
};

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config);

struct LgatConfig {
  int arch_dim = 128;            // shared encoding width A
  int chunk_encoding_dim = 64;   // per-chunk encoder width
  int max_tokens = 32;           // tokens per script chunk
  int chunk_encoder_heads = 4;
  int gat_layers = 2;
  int gat_heads = 4;
  int gat_head_dim = 16;
  int pool_heads = 8;
  int fusion_heads = 8;
  int decoder_layers = 2;
  int decoder_heads = 8;
  int decoder_ffn_dim = 256;
  int max_target_len = 64;
  real dropout = 0.15;
  real leaky_slope = 0.2;
  real lr = 1e-5;
  int epochs = 20;
  int vocab_min_freq = 2;
  uint64_t seed = 0;
  EmbedderConfig embedder;
  bool include_mentions = false;
  bool embed_headings = false;

  static LgatConfig desk_profile();
  static LgatConfig paper_profile();

  int gat_output_dim() const { return gat_heads * gat_head_dim; }
  void validate() const;

  std::string to_json_string() const;
  static LgatConfig from_json_string(std::string_view text);
  std::string hash() const;  // sha256 of the canonical JSON form
};

enum class Variant { full, text_only, graph_only, full_without_characters };

const char* variant_name(Variant variant);
Variant variant_from_string(std::string_view name);

// Whitespace tokens above a frequency cutoff plus pad/bos/eos/unk, ids in
// first-appearance order.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  static Vocab build(const std::vector<std::string>& texts, int min_freq);
  static Vocab from_tokens(std::vector<std::string> tokens);  // full id list

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  int id_of(const std::string& token) const;  // kUnk when absent

  std::vector<int> encode(std::string_view text) const;
  std::string decode(const std::vector<int>& ids) const;  // skips specials

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

std::vector<std::string> split_whitespace(std::string_view text);

// Greedy whitespace chunking: every chunk except possibly the last holds
// exactly max_tokens tokens; empty text gives one empty chunk.
std::vector<std::vector<std::string>> chunk_script(std::string_view text,
                                                   int max_tokens);

// --- GAT ---------------------------------------------------------------------

// Additive attention bias [n, n]: 0 where an edge (any type, both directions)
// or a self-loop allows attention, -1e30 elsewhere. Node order: scenes,
// dialogues, characters.
Tensor adjacency_bias(const CaDGraph& graph);

// Node feature matrix [n, dim] in the same node order.
Tensor node_feature_matrix(const CaDGraph& graph);

struct GatLayer {
  int in_dim = 0;
  int heads = 0;
  int head_dim = 0;
  real slope = 0.2;
  real dropout_p = 0.15;
  std::vector<Tensor> weight;    // per head [in_dim, head_dim]
  std::vector<Tensor> attn_src;  // per head [head_dim, 1]
  std::vector<Tensor> attn_dst;  // per head [head_dim, 1]

  static GatLayer init(int in_dim, int heads, int head_dim, real slope,
                       real dropout_p, Rng& rng, ParamStore& params,
                       const std::string& prefix);

  // x: [n, in_dim]; adj_bias: [n, n]. Appends the per-head attention
  // matrices (pre-dropout) to attn_out when provided.
  Tensor forward(const Tensor& x, const Tensor& adj_bias, bool train, Rng* rng,
                 std::vector<Tensor>* attn_out = nullptr) const;
};

// --- model -------------------------------------------------------------------

class LgatModel {
 public:
  LgatModel(LgatConfig config, Variant variant, Vocab vocab);

  static LgatModel load(const std::string& dir);
  void save(const std::string& dir) const;

  const LgatConfig& config() const { return config_; }
  Variant variant() const { return variant_; }
  const Vocab& vocab() const { return vocab_; }
  ParamStore& params() { return params_; }
  long step_count() const { return step_count_; }
  void set_step_count(long n) { step_count_ = n; }

  void set_train(bool train) { train_ = train; }
  bool training() const { return train_; }
  Rng& dropout_rng() { return dropout_rng_; }

  // Final-GAT-layer node features [n, gat_output_dim].
  Tensor gat_node_features(const CaDGraph& graph,
                           std::vector<Tensor>* attn_out = nullptr);
  Tensor encode_graph(const CaDGraph& graph,
                      std::vector<Tensor>* attn_out = nullptr);
  Tensor encode_text(const std::vector<std::vector<std::string>>& chunks);
  Tensor fuse(const Tensor& graph_enc, const Tensor& text_enc);

  // Teacher-forced mean cross-entropy of the target under the memory.
  Tensor decode_teacher_loss(const Tensor& memory,
                             const std::vector<int>& target_ids);
  // Greedy generation; stops at eos or at max_target_len generated tokens.
  std::vector<int> greedy_decode(const Tensor& memory);

  // Variant wiring: full fuses both encodings, single-modality variants feed
  // the surviving encoding straight to the decoder, and
  // full_without_characters strips the graph first.
  Tensor memory_for(const CaDGraph* graph, const std::string& script_text);

  bool needs_graph() const { return variant_ != Variant::text_only; }

 private:
  void build_blocks();

  LgatConfig config_;
  Variant variant_;
  Vocab vocab_;
  ParamStore params_;
  bool train_ = false;
  Rng dropout_rng_;
  long step_count_ = 0;

  // graph encoder
  std::vector<GatLayer> gat_layers_;
  Linear graph_readout_;
  // chunked text encoder
  Tensor chunk_token_embed_;  // [V, E]
  Tensor chunk_pos_embed_;    // [max_tokens, E]
  MultiHeadAttention chunk_attn_;
  Linear pool_input_;         // E -> A
  MultiHeadAttention pool_attn_;
  Tensor pool_query_;         // [1, A]
  // fusion
  MultiHeadAttention fusion_attn_;
  Linear fusion_collapse_;    // 2A -> A
  Linear fusion_out_;         // A -> A
  // decoder
  Tensor dec_token_embed_;    // [V, A]
  Tensor dec_pos_embed_;      // [max_target_len, A]
  struct DecoderLayer {
    MultiHeadAttention self_attn;
    MultiHeadAttention cross_attn;
    FeedForward ffn;
  };
  std::vector<DecoderLayer> dec_layers_;
  Linear dec_out_;            // A -> V

  Tensor decoder_logits(const Tensor& memory, const std::vector<int>& input_ids);
};

// --- training ----------------------------------------------------------------

struct TrainPair {
  Screenplay screenplay;
  std::string summary;
};

struct TrainResult {
  std::vector<std::pair<long, real>> step_losses;
  std::vector<real> epoch_mean;
};

Vocab build_vocab(const std::vector<TrainPair>& corpus, int min_freq);

TrainResult train_model(LgatModel& model, const std::vector<TrainPair>& corpus,
                        const Embedder* embedder);

std::string loss_curve_csv(const TrainResult& result);

// Reads screenplay XML files plus summaries.jsonl from a directory and pairs
// them by id.
std::vector<TrainPair> load_corpus(const std::string& dir);

}  // namespace screensum
