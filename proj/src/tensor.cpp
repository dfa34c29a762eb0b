#include "screensum/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace screensum {

using nlohmann::json;

namespace detail {

struct Node {
  Shape shape;
  std::vector<real> data;
  std::vector<real> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward_fn;  // adds into parents' grads

  size_t size() const { return data.size(); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

using detail::Node;

namespace {

size_t shape_size(const Shape& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) raise(ErrorCode::ShapeMismatch, "shape entries must be positive");
    n *= static_cast<size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

[[noreturn]] void shape_error(const std::string& op, const Shape& a, const Shape& b) {
  raise(ErrorCode::ShapeMismatch, op + ": " + shape_str(a) + " vs " + shape_str(b));
}

// Rows/cols view: 1-D [n] counts as one row, scalars as 1x1.
std::pair<int, int> as_matrix(const Shape& shape) {
  if (shape.empty()) return {1, 1};
  if (shape.size() == 1) return {1, shape[0]};
  int rows = 1;
  for (size_t i = 0; i + 1 < shape.size(); ++i) rows *= shape[i];
  return {rows, shape.back()};
}

}  // namespace

std::shared_ptr<Node> node_of(const Tensor& t) {
  if (!t.node_) raise(ErrorCode::InvalidArgument, "empty tensor operand");
  return t.node_;
}

Tensor wrap(std::shared_ptr<Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

namespace {

std::shared_ptr<Node> make_node(Shape shape, std::vector<real> data,
                                bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return node;
}

std::shared_ptr<Node> result_node(Shape shape, std::vector<real> data,
                                  std::vector<std::shared_ptr<Node>> parents) {
  bool needs_grad = false;
  for (const auto& p : parents) needs_grad = needs_grad || p->requires_grad;
  auto node = make_node(std::move(shape), std::move(data), needs_grad);
  if (needs_grad) node->parents = std::move(parents);
  return node;
}

}  // namespace

// Tensor -----------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  size_t n = shape_size(shape);
  return wrap(make_node(std::move(shape), std::vector<real>(n, 0.0), requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<real> data, bool requires_grad) {
  if (shape_size(shape) != data.size())
    raise(ErrorCode::ShapeMismatch, "from_data: data length does not match shape");
  return wrap(make_node(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(real value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

Tensor Tensor::xavier_uniform(Shape shape, Rng& rng, bool requires_grad) {
  if (shape.size() != 2)
    raise(ErrorCode::ShapeMismatch, "xavier_uniform expects a 2-D shape");
  real limit = std::sqrt(6.0 / (shape[0] + shape[1]));
  size_t n = shape_size(shape);
  std::vector<real> data(n);
  for (real& v : data) v = rng.uniform(-limit, limit);
  return from_data(std::move(shape), std::move(data), requires_grad);
}

const Shape& Tensor::shape() const {
  if (!node_) raise(ErrorCode::InvalidArgument, "empty tensor");
  return node_->shape;
}

int Tensor::rows() const { return as_matrix(shape()).first; }
int Tensor::cols() const { return as_matrix(shape()).second; }
size_t Tensor::size() const { return node_ ? node_->size() : 0; }

std::vector<real>& Tensor::data() {
  if (!node_) raise(ErrorCode::InvalidArgument, "empty tensor");
  return node_->data;
}

const std::vector<real>& Tensor::data() const {
  if (!node_) raise(ErrorCode::InvalidArgument, "empty tensor");
  return node_->data;
}

const std::vector<real>& Tensor::grad() const {
  if (!node_) raise(ErrorCode::InvalidArgument, "empty tensor");
  node_->ensure_grad();
  return node_->grad;
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

real Tensor::item() const {
  if (!node_ || node_->size() != 1)
    raise(ErrorCode::ShapeMismatch, "item() needs a single-element tensor");
  return node_->data[0];
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->data.size(), 0.0);
}

void Tensor::backward() {
  if (!node_) raise(ErrorCode::InvalidArgument, "empty tensor");
  if (node_->size() != 1)
    raise(ErrorCode::ShapeMismatch, "backward() needs a scalar output");

  // Iterative post-order topological sort.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second)
        stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* node : order) node->ensure_grad();
  node_->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn();
  }
}

// Helpers ------------------------------------------------------------------

namespace {

enum class Broadcast { none, row };  // row: b has shape [1, n] or [n]

Broadcast broadcast_kind(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return Broadcast::none;
  auto [ar, ac] = as_matrix(a);
  auto [br, bc] = as_matrix(b);
  if (br == 1 && bc == ac) return Broadcast::row;
  shape_error(op, a, b);
}

}  // namespace

// Elementwise ----------------------------------------------------------------

namespace {

Tensor binary_elementwise(const Tensor& ta, const Tensor& tb, const char* name,
                          real bsign) {
  auto a = node_of(ta);
  auto b = node_of(tb);
  Broadcast mode = broadcast_kind(a->shape, b->shape, name);
  size_t n = a->size();
  size_t bn = b->size();
  std::vector<real> out(n);
  for (size_t i = 0; i < n; ++i)
    out[i] = a->data[i] + bsign * b->data[mode == Broadcast::none ? i : i % bn];
  auto result = result_node(a->shape, std::move(out), {a, b});
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [a, b, r, mode, bsign]() {
      size_t n = r->size(), bn = b->size();
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < n; ++i) a->grad[i] += r->grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t i = 0; i < n; ++i)
          b->grad[mode == Broadcast::none ? i : i % bn] += bsign * r->grad[i];
      }
    };
  }
  return wrap(result);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_elementwise(a, b, "add", 1.0); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_elementwise(a, b, "sub", -1.0); }

Tensor mul(const Tensor& ta, const Tensor& tb) {
  auto a = node_of(ta);
  auto b = node_of(tb);
  Broadcast mode = broadcast_kind(a->shape, b->shape, "mul");
  size_t n = a->size(), bn = b->size();
  std::vector<real> out(n);
  for (size_t i = 0; i < n; ++i)
    out[i] = a->data[i] * b->data[mode == Broadcast::none ? i : i % bn];
  auto result = result_node(a->shape, std::move(out), {a, b});
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [a, b, r, mode]() {
      size_t n = r->size(), bn = b->size();
      for (size_t i = 0; i < n; ++i) {
        size_t bi = mode == Broadcast::none ? i : i % bn;
        if (a->requires_grad) {
          a->ensure_grad();
          a->grad[i] += r->grad[i] * b->data[bi];
        }
        if (b->requires_grad) {
          b->ensure_grad();
          b->grad[bi] += r->grad[i] * a->data[i];
        }
      }
    };
  }
  return wrap(result);
}

Tensor scale(const Tensor& ta, real k) {
  auto a = node_of(ta);
  std::vector<real> out(a->size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * k;
  auto result = result_node(a->shape, std::move(out), {a});
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [a, r, k]() {
      a->ensure_grad();
      for (size_t i = 0; i < r->size(); ++i) a->grad[i] += k * r->grad[i];
    };
  }
  return wrap(result);
}

// Matmul ---------------------------------------------------------------------

Tensor matmul(const Tensor& ta, const Tensor& tb) {
  auto a = node_of(ta);
  auto b = node_of(tb);
  if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0])
    shape_error("matmul", a->shape, b->shape);
  const int m = a->shape[0], k = a->shape[1], n = b->shape[1];
  std::vector<real> out(static_cast<size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      real av = a->data[static_cast<size_t>(i) * k + p];
      if (av == 0.0) continue;
      const real* brow = &b->data[static_cast<size_t>(p) * n];
      real* orow = &out[static_cast<size_t>(i) * n];
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  auto result = result_node({m, n}, std::move(out), {a, b});
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [a, b, r, m, k, n]() {
      if (a->requires_grad) {
        a->ensure_grad();
        // dA = dC * B^T
        for (int i = 0; i < m; ++i) {
          for (int p = 0; p < k; ++p) {
            real acc = 0.0;
            const real* grow = &r->grad[static_cast<size_t>(i) * n];
            const real* brow = &b->data[static_cast<size_t>(p) * n];
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            a->grad[static_cast<size_t>(i) * k + p] += acc;
          }
        }
      }
      if (b->requires_grad) {
        b->ensure_grad();
        // dB = A^T * dC
        for (int p = 0; p < k; ++p) {
          for (int i = 0; i < m; ++i) {
            real av = a->data[static_cast<size_t>(i) * k + p];
            if (av == 0.0) continue;
            const real* grow = &r->grad[static_cast<size_t>(i) * n];
            real* brow = &b->grad[static_cast<size_t>(p) * n];
            for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
          }
        }
      }
    };
  }
  return wrap(result);
}

Tensor transpose(const Tensor& ta) {
  auto a = node_of(ta);
  if (a->shape.size() != 2)
    raise(ErrorCode::ShapeMismatch, "transpose expects a 2-D tensor");
  const int m = a->shape[0], n = a->shape[1];
  std::vector<real> out(a->size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<size_t>(j) * m + i] = a->data[static_cast<size_t>(i) * n + j];
  auto result = result_node({n, m}, std::move(out), {a});
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [a, r, m, n]() {
      a->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          a->grad[static_cast<size_t>(i) * n + j] +=
              r->grad[static_cast<size_t>(j) * m + i];
    };
  }
  return wrap(result);
}

// Concat / slice / reshape ----------------------------------------------------

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) raise(ErrorCode::InvalidArgument, "concat_rows: no inputs");
  std::vector<std::shared_ptr<Node>> nodes;
  for (const auto& p : parts) nodes.push_back(node_of(p));
  const int cols = as_matrix(nodes[0]->shape).second;
  int rows = 0;
  std::vector<real> out;
  for (const auto& node : nodes) {
    auto [r, c] = as_matrix(node->shape);
    if (c != cols) shape_error("concat_rows", nodes[0]->shape, node->shape);
    rows += r;
    out.insert(out.end(), node->data.begin(), node->data.end());
  }
  auto result = result_node({rows, cols}, std::move(out), nodes);
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [nodes, r]() {
      size_t offset = 0;
      for (const auto& node : nodes) {
        if (node->requires_grad) {
          node->ensure_grad();
          for (size_t i = 0; i < node->size(); ++i)
            node->grad[i] += r->grad[offset + i];
        }
        offset += node->size();
      }
    };
  }
  return wrap(result);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) raise(ErrorCode::InvalidArgument, "concat_cols: no inputs");
  std::vector<std::shared_ptr<Node>> nodes;
  for (const auto& p : parts) nodes.push_back(node_of(p));
  const int rows = as_matrix(nodes[0]->shape).first;
  int cols = 0;
  std::vector<int> widths;
  for (const auto& node : nodes) {
    auto [r, c] = as_matrix(node->shape);
    if (r != rows) shape_error("concat_cols", nodes[0]->shape, node->shape);
    widths.push_back(c);
    cols += c;
  }
  std::vector<real> out(static_cast<size_t>(rows) * cols);
  int col_offset = 0;
  for (size_t k = 0; k < nodes.size(); ++k) {
    int w = widths[k];
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < w; ++j)
        out[static_cast<size_t>(i) * cols + col_offset + j] =
            nodes[k]->data[static_cast<size_t>(i) * w + j];
    col_offset += w;
  }
  auto result = result_node({rows, cols}, std::move(out), nodes);
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [nodes, widths, rows, cols, r]() {
      int col_offset = 0;
      for (size_t k = 0; k < nodes.size(); ++k) {
        int w = widths[k];
        if (nodes[k]->requires_grad) {
          nodes[k]->ensure_grad();
          for (int i = 0; i < rows; ++i)
            for (int j = 0; j < w; ++j)
              nodes[k]->grad[static_cast<size_t>(i) * w + j] +=
                  r->grad[static_cast<size_t>(i) * cols + col_offset + j];
        }
        col_offset += w;
      }
    };
  }
  return wrap(result);
}

Tensor slice_rows(const Tensor& ta, int start, int count) {
  auto a = node_of(ta);
  auto [rows, cols] = as_matrix(a->shape);
  if (start < 0 || count <= 0 || start + count > rows)
    raise(ErrorCode::ShapeMismatch, "slice_rows out of range");
  std::vector<real> out(static_cast<size_t>(count) * cols);
  std::copy_n(a->data.begin() + static_cast<size_t>(start) * cols, out.size(),
              out.begin());
  auto result = result_node({count, cols}, std::move(out), {a});
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [a, r, start, cols]() {
      a->ensure_grad();
      size_t base = static_cast<size_t>(start) * cols;
      for (size_t i = 0; i < r->size(); ++i) a->grad[base + i] += r->grad[i];
    };
  }
  return wrap(result);
}

Tensor slice_cols(const Tensor& ta, int start, int count) {
  auto a = node_of(ta);
  auto [rows, cols] = as_matrix(a->shape);
  if (start < 0 || count <= 0 || start + count > cols)
    raise(ErrorCode::ShapeMismatch, "slice_cols out of range");
  std::vector<real> out(static_cast<size_t>(rows) * count);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < count; ++j)
      out[static_cast<size_t>(i) * count + j] =
          a->data[static_cast<size_t>(i) * cols + start + j];
  auto result = result_node({rows, count}, std::move(out), {a});
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [a, r, rows, cols, start, count]() {
      a->ensure_grad();
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < count; ++j)
          a->grad[static_cast<size_t>(i) * cols + start + j] +=
              r->grad[static_cast<size_t>(i) * count + j];
    };
  }
  return wrap(result);
}

Tensor reshape(const Tensor& ta, Shape shape) {
  auto a = node_of(ta);
  if (shape_size(shape) != a->size())
    raise(ErrorCode::ShapeMismatch, "reshape must preserve the element count");
  auto result = result_node(std::move(shape), a->data, {a});
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [a, r]() {
      a->ensure_grad();
      for (size_t i = 0; i < r->size(); ++i) a->grad[i] += r->grad[i];
    };
  }
  return wrap(result);
}

Tensor gather_rows(const Tensor& ttable, const std::vector<int>& rows) {
  auto table = node_of(ttable);
  if (table->shape.size() != 2)
    raise(ErrorCode::ShapeMismatch, "gather_rows expects a 2-D table");
  const int n = table->shape[0], d = table->shape[1];
  if (rows.empty()) raise(ErrorCode::InvalidArgument, "gather_rows: no indices");
  for (int r : rows)
    if (r < 0 || r >= n)
      raise(ErrorCode::ShapeMismatch, "gather_rows index out of range");
  std::vector<real> out(rows.size() * static_cast<size_t>(d));
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy_n(table->data.begin() + static_cast<size_t>(rows[i]) * d, d,
                out.begin() + i * d);
  auto result =
      result_node({static_cast<int>(rows.size()), d}, std::move(out), {table});
  if (result->requires_grad) {
    Node* r = result.get();
    auto idx = rows;
    result->backward_fn = [table, r, idx, d]() {
      table->ensure_grad();
      for (size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < d; ++j)
          table->grad[static_cast<size_t>(idx[i]) * d + j] +=
              r->grad[i * static_cast<size_t>(d) + j];
    };
  }
  return wrap(result);
}

// Nonlinearities ---------------------------------------------------------------

namespace {

Tensor unary_op(const Tensor& ta, const std::function<real(real)>& fwd,
                const std::function<real(real, real)>& dfn) {
  auto a = node_of(ta);
  std::vector<real> out(a->size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(a->data[i]);
  auto result = result_node(a->shape, std::move(out), {a});
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [a, r, dfn]() {
      a->ensure_grad();
      for (size_t i = 0; i < r->size(); ++i)
        a->grad[i] += r->grad[i] * dfn(a->data[i], r->data[i]);
    };
  }
  return wrap(result);
}

}  // namespace

Tensor leaky_relu(const Tensor& a, real slope) {
  return unary_op(
      a, [slope](real x) { return x >= 0 ? x : slope * x; },
      [slope](real x, real) { return x >= 0 ? 1.0 : slope; });
}

Tensor relu(const Tensor& a) {
  return unary_op(
      a, [](real x) { return x > 0 ? x : 0.0; },
      [](real x, real) { return x > 0 ? 1.0 : 0.0; });
}

Tensor elu(const Tensor& a) {
  return unary_op(
      a, [](real x) { return x >= 0 ? x : std::expm1(x); },
      [](real x, real y) { return x >= 0 ? 1.0 : y + 1.0; });
}

Tensor dropout(const Tensor& ta, real p, bool train, Rng& rng) {
  if (p < 0.0 || p >= 1.0)
    raise(ErrorCode::InvalidArgument, "dropout rate must lie in [0, 1)");
  auto a = node_of(ta);
  if (!train || p == 0.0) {
    // evaluation mode: exact identity pass-through
    auto result = result_node(a->shape, a->data, {a});
    if (result->requires_grad) {
      Node* r = result.get();
      result->backward_fn = [a, r]() {
        a->ensure_grad();
        for (size_t i = 0; i < r->size(); ++i) a->grad[i] += r->grad[i];
      };
    }
    return wrap(result);
  }
  // inverted dropout with a recorded mask
  auto mask = std::make_shared<std::vector<real>>(a->size());
  real keep_scale = 1.0 / (1.0 - p);
  for (real& m : *mask) m = (rng.uniform() < p) ? 0.0 : keep_scale;
  std::vector<real> out(a->size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * (*mask)[i];
  auto result = result_node(a->shape, std::move(out), {a});
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [a, r, mask]() {
      a->ensure_grad();
      for (size_t i = 0; i < r->size(); ++i) a->grad[i] += r->grad[i] * (*mask)[i];
    };
  }
  return wrap(result);
}

// Softmax / normalization ------------------------------------------------------

Tensor softmax_rows(const Tensor& ta) {
  auto a = node_of(ta);
  auto [rows, cols] = as_matrix(a->shape);
  std::vector<real> out(a->size());
  for (int i = 0; i < rows; ++i) {
    const real* x = &a->data[static_cast<size_t>(i) * cols];
    real* y = &out[static_cast<size_t>(i) * cols];
    real max_v = x[0];
    for (int j = 1; j < cols; ++j) max_v = std::max(max_v, x[j]);
    real sum = 0.0;
    for (int j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - max_v);
      sum += y[j];
    }
    for (int j = 0; j < cols; ++j) y[j] /= sum;
  }
  auto result = result_node(a->shape, std::move(out), {a});
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [a, r, rows, cols]() {
      a->ensure_grad();
      for (int i = 0; i < rows; ++i) {
        const real* y = &r->data[static_cast<size_t>(i) * cols];
        const real* gy = &r->grad[static_cast<size_t>(i) * cols];
        real dot = 0.0;
        for (int j = 0; j < cols; ++j) dot += y[j] * gy[j];
        real* gx = &a->grad[static_cast<size_t>(i) * cols];
        for (int j = 0; j < cols; ++j) gx[j] += y[j] * (gy[j] - dot);
      }
    };
  }
  return wrap(result);
}

Tensor layer_norm(const Tensor& ta, const Tensor& tgamma, const Tensor& tbeta,
                  real eps) {
  auto a = node_of(ta);
  auto gamma = node_of(tgamma);
  auto beta = node_of(tbeta);
  auto [rows, cols] = as_matrix(a->shape);
  if (static_cast<int>(gamma->size()) != cols ||
      static_cast<int>(beta->size()) != cols)
    raise(ErrorCode::ShapeMismatch, "layer_norm: gamma/beta must match the last axis");

  std::vector<real> out(a->size());
  auto xhat = std::make_shared<std::vector<real>>(a->size());
  auto inv_std = std::make_shared<std::vector<real>>(rows);
  for (int i = 0; i < rows; ++i) {
    const real* x = &a->data[static_cast<size_t>(i) * cols];
    real mean = 0.0;
    for (int j = 0; j < cols; ++j) mean += x[j];
    mean /= cols;
    real var = 0.0;
    for (int j = 0; j < cols; ++j) var += (x[j] - mean) * (x[j] - mean);
    var /= cols;
    real inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = inv;
    for (int j = 0; j < cols; ++j) {
      real h = (x[j] - mean) * inv;
      (*xhat)[static_cast<size_t>(i) * cols + j] = h;
      out[static_cast<size_t>(i) * cols + j] = gamma->data[j] * h + beta->data[j];
    }
  }
  auto result = result_node(a->shape, std::move(out), {a, gamma, beta});
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [a, gamma, beta, r, xhat, inv_std, rows, cols]() {
      for (int i = 0; i < rows; ++i) {
        const real* gy = &r->grad[static_cast<size_t>(i) * cols];
        const real* h = &(*xhat)[static_cast<size_t>(i) * cols];
        if (gamma->requires_grad) {
          gamma->ensure_grad();
          for (int j = 0; j < cols; ++j) gamma->grad[j] += gy[j] * h[j];
        }
        if (beta->requires_grad) {
          beta->ensure_grad();
          for (int j = 0; j < cols; ++j) beta->grad[j] += gy[j];
        }
        if (a->requires_grad) {
          a->ensure_grad();
          real sum_g = 0.0, sum_gh = 0.0;
          std::vector<real> g(cols);
          for (int j = 0; j < cols; ++j) {
            g[j] = gy[j] * gamma->data[j];
            sum_g += g[j];
            sum_gh += g[j] * h[j];
          }
          real inv = (*inv_std)[i];
          real* gx = &a->grad[static_cast<size_t>(i) * cols];
          for (int j = 0; j < cols; ++j)
            gx[j] += inv * (g[j] - sum_g / cols - h[j] * sum_gh / cols);
        }
      }
    };
  }
  return wrap(result);
}

// Reductions -------------------------------------------------------------------

Tensor mean_rows(const Tensor& ta) {
  auto a = node_of(ta);
  auto [rows, cols] = as_matrix(a->shape);
  std::vector<real> out(cols, 0.0);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      out[j] += a->data[static_cast<size_t>(i) * cols + j];
  for (real& v : out) v /= rows;
  auto result = result_node({1, cols}, std::move(out), {a});
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [a, r, rows, cols]() {
      a->ensure_grad();
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
          a->grad[static_cast<size_t>(i) * cols + j] += r->grad[j] / rows;
    };
  }
  return wrap(result);
}

namespace {

Tensor reduce_all(const Tensor& ta, bool mean) {
  auto a = node_of(ta);
  real sum = 0.0;
  for (real v : a->data) sum += v;
  real denom = mean ? static_cast<real>(a->size()) : 1.0;
  auto result = result_node({1}, {sum / denom}, {a});
  if (result->requires_grad) {
    Node* r = result.get();
    result->backward_fn = [a, r, denom]() {
      a->ensure_grad();
      real g = r->grad[0] / denom;
      for (size_t i = 0; i < a->size(); ++i) a->grad[i] += g;
    };
  }
  return wrap(result);
}

}  // namespace

Tensor mean_all(const Tensor& a) { return reduce_all(a, true); }
Tensor sum_all(const Tensor& a) { return reduce_all(a, false); }

Tensor cross_entropy(const Tensor& tlogits, const std::vector<int>& targets) {
  auto logits = node_of(tlogits);
  if (logits->shape.size() != 2)
    raise(ErrorCode::ShapeMismatch, "cross_entropy expects 2-D logits");
  const int n = logits->shape[0], v = logits->shape[1];
  if (static_cast<int>(targets.size()) != n)
    raise(ErrorCode::ShapeMismatch, "cross_entropy: one target per row");
  for (int t : targets)
    if (t < 0 || t >= v)
      raise(ErrorCode::ShapeMismatch, "cross_entropy target out of range");

  auto probs = std::make_shared<std::vector<real>>(logits->size());
  real loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const real* x = &logits->data[static_cast<size_t>(i) * v];
    real max_v = x[0];
    for (int j = 1; j < v; ++j) max_v = std::max(max_v, x[j]);
    real sum = 0.0;
    for (int j = 0; j < v; ++j) sum += std::exp(x[j] - max_v);
    real log_sum = std::log(sum) + max_v;
    loss += log_sum - x[targets[i]];
    for (int j = 0; j < v; ++j)
      (*probs)[static_cast<size_t>(i) * v + j] = std::exp(x[j] - log_sum);
  }
  loss /= n;
  if (!std::isfinite(loss)) raise(ErrorCode::NonFinite, "cross_entropy is not finite");

  auto result = result_node({1}, {loss}, {logits});
  if (result->requires_grad) {
    Node* r = result.get();
    auto tgt = targets;
    result->backward_fn = [logits, r, probs, tgt, n, v]() {
      logits->ensure_grad();
      real g = r->grad[0] / n;
      for (int i = 0; i < n; ++i) {
        real* gx = &logits->grad[static_cast<size_t>(i) * v];
        const real* p = &(*probs)[static_cast<size_t>(i) * v];
        for (int j = 0; j < v; ++j) gx[j] += g * p[j];
        gx[tgt[i]] -= g;
      }
    };
  }
  return wrap(result);
}

Tensor detach(const Tensor& ta) {
  auto a = node_of(ta);
  return wrap(make_node(a->shape, a->data, false));
}

// Gradient check ----------------------------------------------------------------

bool grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor& x,
                real eps, real tol, real* max_rel) {
  if (!x.requires_grad())
    raise(ErrorCode::InvalidArgument, "grad_check input must require gradients");
  x.zero_grad();
  Tensor y = f(x);
  if (y.size() != 1)
    raise(ErrorCode::ShapeMismatch, "grad_check function must be scalar-valued");
  if (!std::isfinite(y.item()))
    raise(ErrorCode::NonFinite, "grad_check function value is not finite");
  y.backward();
  std::vector<real> analytic = x.grad();

  real worst = 0.0;
  std::vector<real>& data = x.data();
  for (size_t i = 0; i < data.size(); ++i) {
    real saved = data[i];
    data[i] = saved + eps;
    real up = f(x).item();
    data[i] = saved - eps;
    real down = f(x).item();
    data[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      raise(ErrorCode::NonFinite, "grad_check probe is not finite");
    real fd = (up - down) / (2 * eps);
    real rel = std::abs(analytic[i] - fd) /
               std::max({real(1), std::abs(analytic[i]), std::abs(fd)});
    worst = std::max(worst, rel);
  }
  if (max_rel) *max_rel = worst;
  return worst <= tol;
}

// Parameters ----------------------------------------------------------------------

Tensor ParamStore::add(const std::string& name, Tensor tensor) {
  if (!tensor.requires_grad())
    raise(ErrorCode::InvalidArgument, "parameters must require gradients");
  for (const auto& p : items_)
    if (p.name == name)
      raise(ErrorCode::InvalidArgument, "duplicate parameter name " + name);
  items_.push_back({name, tensor});
  return tensor;
}

Tensor ParamStore::find(const std::string& name) const {
  for (const auto& p : items_)
    if (p.name == name) return p.value;
  return Tensor();
}

size_t ParamStore::total_size() const {
  size_t n = 0;
  for (const auto& p : items_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : items_) p.value.zero_grad();
}

AdamOptimizer::AdamOptimizer(real lr, real beta1, real beta2, real eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(ParamStore& params) {
  auto& items = params.items();
  if (m_.empty()) {
    m_.resize(items.size());
    v_.resize(items.size());
    for (size_t i = 0; i < items.size(); ++i) {
      m_[i].assign(items[i].value.size(), 0.0);
      v_[i].assign(items[i].value.size(), 0.0);
    }
  }
  if (m_.size() != items.size())
    raise(ErrorCode::InvalidArgument, "optimizer bound to a different store");

  ++step_count_;
  real bc1 = 1.0 - std::pow(beta1_, static_cast<real>(step_count_));
  real bc2 = 1.0 - std::pow(beta2_, static_cast<real>(step_count_));
  for (size_t i = 0; i < items.size(); ++i) {
    std::vector<real>& w = items[i].value.data();
    const std::vector<real>& g = items[i].value.grad();
    for (size_t j = 0; j < w.size(); ++j) {
      real gj = g[j];
      if (!std::isfinite(gj))
        raise(ErrorCode::NonFinite,
              "gradient of " + items[i].name + " is not finite");
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * gj;
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * gj * gj;
      real m_hat = m_[i][j] / bc1;
      real v_hat = v_[i][j] / bc2;
      w[j] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
      if (!std::isfinite(w[j]))
        raise(ErrorCode::NonFinite,
              "parameter " + items[i].name + " left the finite range");
    }
  }
}

// Checkpoints ----------------------------------------------------------------------

namespace {

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::UnwritableFile, "cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorCode::UnwritableFile, "cannot write " + path);
}

}  // namespace

void save_params(const std::string& dir, const ParamStore& params,
                 long step_count, const std::string& config_hash) {
  std::filesystem::create_directories(dir);
  json names = json::array();
  std::string bin;
  for (const auto& p : params.items()) {
    names.push_back({{"name", p.name}, {"shape", p.value.shape()}});
    for (real v : p.value.data()) {
      float f = static_cast<float>(v);
      char bytes[4];
      std::memcpy(bytes, &f, 4);
      bin.append(bytes, 4);
    }
  }
  json manifest = {{"schema_version", 1},
                   {"step_count", step_count},
                   {"config_hash", config_hash},
                   {"params", std::move(names)}};
  write_bytes(dir + "/manifest.json", manifest.dump(2));
  write_bytes(dir + "/params.bin", bin);
}

ManifestInfo load_params(const std::string& dir, ParamStore& params) {
  std::ifstream manifest_in(dir + "/manifest.json");
  if (!manifest_in)
    raise(ErrorCode::UnreadableFile, "cannot open " + dir + "/manifest.json");
  json manifest = json::parse(manifest_in, nullptr, false);
  if (manifest.is_discarded())
    raise(ErrorCode::SchemaViolation, "manifest.json is not valid JSON");

  std::ifstream bin(dir + "/params.bin", std::ios::binary);
  if (!bin) raise(ErrorCode::UnreadableFile, "cannot open " + dir + "/params.bin");

  auto& items = params.items();
  const json& names = manifest.at("params");
  if (names.size() != items.size())
    raise(ErrorCode::ConfigMismatch, "checkpoint parameter count differs");
  for (size_t i = 0; i < items.size(); ++i) {
    if (names[i].at("name").get<std::string>() != items[i].name)
      raise(ErrorCode::ConfigMismatch,
            "checkpoint parameter order differs at " + items[i].name);
    Shape shape = names[i].at("shape").get<Shape>();
    if (shape != items[i].value.shape())
      raise(ErrorCode::ConfigMismatch,
            "checkpoint shape differs for " + items[i].name);
    std::vector<real>& w = items[i].value.data();
    for (real& v : w) {
      float f = 0;
      bin.read(reinterpret_cast<char*>(&f), 4);
      if (!bin) raise(ErrorCode::UnreadableFile, "params.bin is truncated");
      v = static_cast<real>(f);
    }
  }
  char extra = 0;
  bin.read(&extra, 1);
  if (!bin.eof())
    raise(ErrorCode::ConfigMismatch, "params.bin holds more data than the manifest");

  ManifestInfo info;
  info.step_count = manifest.value("step_count", 0L);
  info.config_hash = manifest.value("config_hash", "");
  return info;
}

}  // namespace screensum
