#pragma once

#include <string>

#include "screensum/tensor.hpp"

namespace screensum {

// Affine map x [n, in] -> x W + b [n, out].
struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [1, out]

  static Linear init(int in_dim, int out_dim, Rng& rng, ParamStore& params,
                     const std::string& prefix);
  Tensor forward(const Tensor& x) const;
};

struct LayerNormBlock {
  Tensor gamma;  // [1, d]
  Tensor beta;   // [1, d]

  static LayerNormBlock init(int dim, ParamStore& params,
                             const std::string& prefix);
  Tensor forward(const Tensor& x) const;
};

// Multi-head attention over row sequences, post-norm residual. With a memory
// it is cross-attention (queries from x, keys/values from memory); without
// one it is self-attention. An optional additive mask [q, k] is applied to
// the scores before the row softmax.
struct MultiHeadAttention {
  int dim = 0;
  int heads = 0;
  real dropout_p = 0.0;
  Linear wq, wk, wv, wo;
  LayerNormBlock norm;

  static MultiHeadAttention init(int dim, int heads, real dropout_p, Rng& rng,
                                 ParamStore& params, const std::string& prefix);

  Tensor forward(const Tensor& x, const Tensor* memory, const Tensor* mask,
                 bool train, Rng* rng) const;
};

// Two-layer position-wise feed-forward with a post-norm residual.
struct FeedForward {
  Linear expand;
  Linear collapse;
  LayerNormBlock norm;

  static FeedForward init(int dim, int hidden, Rng& rng, ParamStore& params,
                          const std::string& prefix);
  Tensor forward(const Tensor& x) const;
};

// Additive causal mask [n, n]: 0 on and below the diagonal, -1e30 above.
Tensor causal_mask(int n);

}  // namespace screensum
