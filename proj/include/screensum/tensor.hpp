#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "screensum/common.hpp"
#include "screensum/error.hpp"

namespace screensum {

namespace detail {
struct Node;
}

using Shape = std::vector<int>;

// Dense row-major tensor with reverse-mode autodiff. A Tensor is a cheap
// handle onto a graph node; ops build fresh nodes, backward() walks the graph
// in reverse topological order and accumulates gradients into every node that
// requires them.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<real> data,
                          bool requires_grad = false);
  static Tensor scalar(real value, bool requires_grad = false);
  static Tensor xavier_uniform(Shape shape, Rng& rng, bool requires_grad = true);

  bool valid() const { return node_ != nullptr; }
  const Shape& shape() const;
  int rows() const;  // 2-D convenience
  int cols() const;
  size_t size() const;

  std::vector<real>& data();
  const std::vector<real>& data() const;
  const std::vector<real>& grad() const;  // empty until backward touches it
  bool requires_grad() const;

  real item() const;  // single-element tensors only

  void zero_grad();
  void backward();  // output must hold exactly one element

  const void* node_id() const { return node_.get(); }

 private:
  friend struct detail::Node;
  friend std::shared_ptr<detail::Node> node_of(const Tensor&);
  friend Tensor wrap(std::shared_ptr<detail::Node> node);
  std::shared_ptr<detail::Node> node_;
};

// --- ops -------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);  // same shape, or b broadcast [1,n]
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise, same broadcast rule
Tensor scale(const Tensor& a, real k);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, int start, int count);
Tensor slice_cols(const Tensor& a, int start, int count);
Tensor reshape(const Tensor& a, Shape shape);
Tensor gather_rows(const Tensor& table, const std::vector<int>& rows);
Tensor softmax_rows(const Tensor& a);  // along the last axis
Tensor leaky_relu(const Tensor& a, real slope);
Tensor relu(const Tensor& a);
Tensor elu(const Tensor& a);
Tensor dropout(const Tensor& a, real p, bool train, Rng& rng);
Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta,
                  real eps = 1e-5);
Tensor mean_rows(const Tensor& a);  // [n, d] -> [1, d]
Tensor mean_all(const Tensor& a);   // -> [1]
Tensor sum_all(const Tensor& a);    // -> [1]
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets);
Tensor detach(const Tensor& a);

// --- verification ----------------------------------------------------------

// Central-difference gradient check of a scalar-valued function. Returns true
// iff the largest relative discrepancy |g_ad - g_fd| / max(1, |g_ad|, |g_fd|)
// stays within tol.
bool grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor& x,
                real eps = 1e-4, real tol = 1e-3, real* max_rel = nullptr);

// --- parameters and optimization ------------------------------------------

struct Parameter {
  std::string name;
  Tensor value;
};

// Ordered, uniquely named parameter list; the order fixes the checkpoint
// layout.
class ParamStore {
 public:
  Tensor add(const std::string& name, Tensor tensor);
  Tensor find(const std::string& name) const;  // invalid Tensor when absent
  std::vector<Parameter>& items() { return items_; }
  const std::vector<Parameter>& items() const { return items_; }
  size_t total_size() const;
  void zero_grad();

 private:
  std::vector<Parameter> items_;
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(real lr, real beta1 = 0.9, real beta2 = 0.999,
                         real eps = 1e-8);

  // One update over every parameter from its accumulated gradient. Throws
  // NonFinite when a gradient or an updated value is not finite.
  void step(ParamStore& params);

  long step_count() const { return step_count_; }
  real learning_rate() const { return lr_; }

 private:
  real lr_, beta1_, beta2_, eps_;
  long step_count_ = 0;
  std::vector<std::vector<real>> m_, v_;
};

// --- checkpoints -----------------------------------------------------------
//
// A checkpoint directory holds manifest.json (names, shapes, step count,
// config hash) and params.bin (raw little-endian 32-bit floats in manifest
// order).

void save_params(const std::string& dir, const ParamStore& params,
                 long step_count, const std::string& config_hash);

struct ManifestInfo {
  long step_count = 0;
  std::string config_hash;
};

// Fills an already-constructed store; names and shapes must match.
ManifestInfo load_params(const std::string& dir, ParamStore& params);

}  // namespace screensum
