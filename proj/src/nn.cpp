#include "screensum/nn.hpp"

#include <cmath>

namespace screensum {

Linear Linear::init(int in_dim, int out_dim, Rng& rng, ParamStore& params,
                    const std::string& prefix) {
  Linear linear;
  linear.weight = params.add(prefix + ".W",
                             Tensor::xavier_uniform({in_dim, out_dim}, rng));
  linear.bias = params.add(prefix + ".b", Tensor::zeros({1, out_dim}, true));
  return linear;
}

Tensor Linear::forward(const Tensor& x) const {
  return add(matmul(x, weight), bias);
}

LayerNormBlock LayerNormBlock::init(int dim, ParamStore& params,
                                    const std::string& prefix) {
  LayerNormBlock block;
  block.gamma = params.add(
      prefix + ".gamma",
      Tensor::from_data({1, dim}, std::vector<real>(dim, 1.0), true));
  block.beta = params.add(prefix + ".beta", Tensor::zeros({1, dim}, true));
  return block;
}

Tensor LayerNormBlock::forward(const Tensor& x) const {
  return layer_norm(x, gamma, beta);
}

MultiHeadAttention MultiHeadAttention::init(int dim, int heads, real dropout_p,
                                            Rng& rng, ParamStore& params,
                                            const std::string& prefix) {
  if (heads <= 0 || dim % heads != 0)
    raise(ErrorCode::ShapeMismatch,
          "attention dim " + std::to_string(dim) + " not divisible by " +
              std::to_string(heads) + " heads");
  MultiHeadAttention mha;
  mha.dim = dim;
  mha.heads = heads;
  mha.dropout_p = dropout_p;
  mha.wq = Linear::init(dim, dim, rng, params, prefix + ".q");
  mha.wk = Linear::init(dim, dim, rng, params, prefix + ".k");
  mha.wv = Linear::init(dim, dim, rng, params, prefix + ".v");
  mha.wo = Linear::init(dim, dim, rng, params, prefix + ".o");
  mha.norm = LayerNormBlock::init(dim, params, prefix + ".norm");
  return mha;
}

Tensor MultiHeadAttention::forward(const Tensor& x, const Tensor* memory,
                                   const Tensor* mask, bool train,
                                   Rng* rng) const {
  const Tensor& kv_src = memory ? *memory : x;
  Tensor q = wq.forward(x);
  Tensor k = wk.forward(kv_src);
  Tensor v = wv.forward(kv_src);

  const int head_dim = dim / heads;
  const real inv_sqrt = 1.0 / std::sqrt(static_cast<real>(head_dim));
  std::vector<Tensor> head_outputs;
  head_outputs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * head_dim, head_dim);
    Tensor kh = slice_cols(k, h * head_dim, head_dim);
    Tensor vh = slice_cols(v, h * head_dim, head_dim);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    if (mask) scores = add(scores, *mask);
    Tensor attn = softmax_rows(scores);
    if (train && dropout_p > 0.0 && rng) attn = dropout(attn, dropout_p, true, *rng);
    head_outputs.push_back(matmul(attn, vh));
  }
  Tensor merged = heads == 1 ? head_outputs[0] : concat_cols(head_outputs);
  Tensor projected = wo.forward(merged);
  return norm.forward(add(x, projected));
}

FeedForward FeedForward::init(int dim, int hidden, Rng& rng, ParamStore& params,
                              const std::string& prefix) {
  FeedForward ffn;
  ffn.expand = Linear::init(dim, hidden, rng, params, prefix + ".in");
  ffn.collapse = Linear::init(hidden, dim, rng, params, prefix + ".out");
  ffn.norm = LayerNormBlock::init(dim, params, prefix + ".norm");
  return ffn;
}

Tensor FeedForward::forward(const Tensor& x) const {
  Tensor hidden = relu(expand.forward(x));
  return norm.forward(add(x, collapse.forward(hidden)));
}

Tensor causal_mask(int n) {
  std::vector<real> data(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) data[static_cast<size_t>(i) * n + j] = -1e30;
  return Tensor::from_data({n, n}, std::move(data));
}

}  // namespace screensum
