#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "keyreader/types.hpp"

namespace krd {

class Graph;
struct Parameter;

// Handle to a node in a computation graph. Cheap to copy; the graph owns
// the storage. Values are dense row-major matrices; vectors are 1xN rows
// unless noted otherwise.
class Tensor {
 public:
  Tensor() = default;

  bool valid() const { return graph_ != nullptr; }
  const Mat& value() const;
  // Gradient of the last backward() loss w.r.t. this node. Only meaningful
  // for nodes that require grad and were reached by backward().
  const Mat& grad() const;
  bool requires_grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Scalar item() const;  // value of a 1x1 tensor
  int id() const { return id_; }
  Graph& graph() const { return *graph_; }

 private:
  friend class Graph;
  Tensor(Graph* g, int id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  int id_ = -1;
};

struct GraphNode {
  Mat value;
  Mat grad;                 // allocated lazily by backward()
  bool requires_grad = false;
  bool grad_live = false;   // grad buffer is zero-initialized and writable
  std::vector<int> parents;
  // Propagates this node's grad into its parents. Captures ids and aux
  // data only, never Node references (the node vector may reallocate).
  std::function<void(Graph&, int)> backprop;
  const char* op = "leaf";
};

// A single-writer computation graph. Nodes are appended in topological
// order (parents precede children), so reverse creation order is a valid
// backward schedule.
class Graph {
 public:
  explicit Graph(std::uint64_t seed = 0) : rng_(seed) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Dropout draws masks only when training is set.
  bool training = false;

  Tensor constant(Mat v) { return make(std::move(v), {}, nullptr, "const"); }
  Tensor constant(Scalar v) { return constant(Mat::Constant(1, 1, v)); }
  // Leaf with an explicit requires-grad flag (used for inputs under test).
  Tensor leaf(Mat v, bool requires_grad);
  // Leaf bound to a named parameter. Repeated binds of the same parameter
  // return the same node so gradients pool in one buffer.
  Tensor param(Parameter& p);

  // Fills grad buffers of every requires-grad node reachable from `loss`.
  // `loss` must be 1x1.
  void backward(const Tensor& loss);

  const GraphNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return nodes_.size(); }
  Rng& rng() { return rng_; }

  const std::vector<std::pair<Parameter*, int>>& bound_params() const { return bound_; }

  // --- op construction internals ---
  Tensor make(Mat value, std::vector<int> parents, std::function<void(Graph&, int)> bp,
              const char* op);
  bool wants_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad_live; }
  Mat& grad_buf(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
  const Mat& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

 private:
  std::vector<GraphNode> nodes_;
  std::vector<std::pair<Parameter*, int>> bound_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// The closed op set. Elementwise ops require identical shapes; there is no
// implicit broadcasting (tile explicitly instead).
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor cmul(const Tensor& a, const Tensor& b);  // elementwise product
Tensor matmul(const Tensor& a, const Tensor& b);
// Concatenate along axis 0 (stack rows) or 1 (widen columns).
Tensor concat(std::span<const Tensor> parts, int axis);
Tensor concat(std::initializer_list<Tensor> parts, int axis);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);  // throws DomainError on nonpositive entries
// Softmax along axis 1 normalizes each row; axis 0 each column. Computed
// with max subtraction.
Tensor softmax(const Tensor& x, int axis);
// Max along an axis (axis 1 -> Nx1 of row maxima). Ties break toward the
// lowest index and the gradient routes entirely to the winner.
Tensor max(const Tensor& x, int axis);
// Replicate along an axis: tile(x, 0, k) stacks k copies of x vertically.
Tensor tile(const Tensor& x, int axis, Index count);
// Half-open row/column ranges.
Tensor slice(const Tensor& x, Index r0, Index r1, Index c0, Index c1);
// Gather rows of `table` (ids.size() x d). Duplicate ids accumulate grads.
Tensor embedding(const Tensor& table, std::vector<int> ids);
// Inverted dropout: in training mode keeps entries with prob 1-p scaled by
// 1/(1-p); identity in eval mode. p in [0, 1).
Tensor dropout(const Tensor& x, Scalar p);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }

// ---------------------------------------------------------------------------
// Helpers composed from the ops above (no new node kinds).
// ---------------------------------------------------------------------------

Tensor rows(const Tensor& x, Index r0, Index r1);
Tensor row(const Tensor& x, Index r);
Tensor cols(const Tensor& x, Index c0, Index c1);
Tensor sum(const Tensor& x);                  // 1x1
Tensor mean_rows(const Tensor& x);            // 1xC column means
Tensor scale(const Tensor& x, Scalar s);
Tensor neg(const Tensor& x);
Tensor to_row(const Tensor& col);             // Nx1 -> 1xN via slices+concat

}  // namespace krd
