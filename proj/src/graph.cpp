#include "keyreader/graph.hpp"

#include <algorithm>
#include <cmath>

#include "keyreader/optim.hpp"

namespace krd {

const Mat& Tensor::value() const { return graph_->node(id_).value; }

const Mat& Tensor::grad() const {
  const GraphNode& n = graph_->node(id_);
  if (!n.grad_live) {
    throw ShapeError("grad", "no gradient on node '" + std::string(n.op) +
                                 "' (not reached by backward or grad not required)");
  }
  return n.grad;
}

bool Tensor::requires_grad() const { return graph_->node(id_).requires_grad; }

Scalar Tensor::item() const {
  const Mat& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("item", "tensor is " + shape_str(v) + ", expected 1x1");
  }
  return v(0, 0);
}

Tensor Graph::make(Mat value, std::vector<int> parents, std::function<void(Graph&, int)> bp,
                   const char* op) {
  GraphNode n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  for (int p : n.parents) {
    if (nodes_[static_cast<std::size_t>(p)].requires_grad) {
      n.requires_grad = true;
      break;
    }
  }
  n.backprop = std::move(bp);
  n.op = op;
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor Graph::leaf(Mat v, bool requires_grad) {
  Tensor t = make(std::move(v), {}, nullptr, "leaf");
  nodes_.back().requires_grad = requires_grad;
  return t;
}

Tensor Graph::param(Parameter& p) {
  for (const auto& [bp, id] : bound_) {
    if (bp == &p) return Tensor(this, id);
  }
  Tensor t = make(p.value, {}, nullptr, "param");
  nodes_.back().requires_grad = true;
  bound_.emplace_back(&p, t.id());
  return t;
}

void Graph::backward(const Tensor& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ShapeError("backward", "loss is " + shape_str(loss.value()) + ", expected 1x1 scalar");
  }
  // Grad buffers are needed on requires-grad nodes reachable from the loss.
  std::vector<char> reach(nodes_.size(), 0);
  std::vector<int> stack{loss.id()};
  reach[static_cast<std::size_t>(loss.id())] = 1;
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    for (int p : nodes_[static_cast<std::size_t>(id)].parents) {
      auto& pn = nodes_[static_cast<std::size_t>(p)];
      if (!reach[static_cast<std::size_t>(p)] && pn.requires_grad) {
        reach[static_cast<std::size_t>(p)] = 1;
        stack.push_back(p);
      }
    }
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (reach[i]) {
      nodes_[i].grad = Mat::Zero(nodes_[i].value.rows(), nodes_[i].value.cols());
      nodes_[i].grad_live = true;
    }
  }
  nodes_[static_cast<std::size_t>(loss.id())].grad(0, 0) = 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (reach[static_cast<std::size_t>(id)] && n.backprop) {
      n.backprop(*this, id);
    }
  }
}

namespace {

Graph& same_graph(const Tensor& a, const Tensor& b, const char* op) {
  if (&a.graph() != &b.graph()) {
    throw ShapeError(op, "operands belong to different graphs");
  }
  return a.graph();
}

void check_same_shape(const char* op, const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(op, a, b);
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  Graph& g = same_graph(a, b, "add");
  check_same_shape("add", a.value(), b.value());
  int ia = a.id(), ib = b.id();
  return g.make(a.value() + b.value(), {ia, ib},
                [ia, ib](Graph& g, int self) {
                  const Mat& go = g.node(self).grad;
                  if (g.wants_grad(ia)) g.grad_buf(ia) += go;
                  if (g.wants_grad(ib)) g.grad_buf(ib) += go;
                },
                "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Graph& g = same_graph(a, b, "sub");
  check_same_shape("sub", a.value(), b.value());
  int ia = a.id(), ib = b.id();
  return g.make(a.value() - b.value(), {ia, ib},
                [ia, ib](Graph& g, int self) {
                  const Mat& go = g.node(self).grad;
                  if (g.wants_grad(ia)) g.grad_buf(ia) += go;
                  if (g.wants_grad(ib)) g.grad_buf(ib) -= go;
                },
                "sub");
}

Tensor cmul(const Tensor& a, const Tensor& b) {
  Graph& g = same_graph(a, b, "cmul");
  check_same_shape("cmul", a.value(), b.value());
  int ia = a.id(), ib = b.id();
  return g.make(a.value().cwiseProduct(b.value()), {ia, ib},
                [ia, ib](Graph& g, int self) {
                  const Mat& go = g.node(self).grad;
                  if (g.wants_grad(ia)) g.grad_buf(ia) += go.cwiseProduct(g.val(ib));
                  if (g.wants_grad(ib)) g.grad_buf(ib) += go.cwiseProduct(g.val(ia));
                },
                "cmul");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  Graph& g = same_graph(a, b, "matmul");
  if (a.value().cols() != b.value().rows()) {
    throw ShapeError("matmul", a.value(), b.value());
  }
  int ia = a.id(), ib = b.id();
  return g.make(a.value() * b.value(), {ia, ib},
                [ia, ib](Graph& g, int self) {
                  const Mat& go = g.node(self).grad;
                  if (g.wants_grad(ia)) g.grad_buf(ia) += go * g.val(ib).transpose();
                  if (g.wants_grad(ib)) g.grad_buf(ib) += g.val(ia).transpose() * go;
                },
                "matmul");
}

Tensor concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat", "empty part list");
  if (axis != 0 && axis != 1) throw ShapeError("concat", "axis must be 0 or 1");
  Graph& g = parts[0].graph();
  Index rows = parts[0].rows(), cols = parts[0].cols();
  Index total = axis == 0 ? rows : cols;
  std::vector<int> ids{parts[0].id()};
  for (std::size_t i = 1; i < parts.size(); ++i) {
    same_graph(parts[0], parts[i], "concat");
    if (axis == 0) {
      if (parts[i].cols() != cols) throw ShapeError("concat", parts[0].value(), parts[i].value());
      total += parts[i].rows();
    } else {
      if (parts[i].rows() != rows) throw ShapeError("concat", parts[0].value(), parts[i].value());
      total += parts[i].cols();
    }
    ids.push_back(parts[i].id());
  }
  Mat out(axis == 0 ? total : rows, axis == 0 ? cols : total);
  Index at = 0;
  std::vector<Index> offsets(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Mat& v = g.val(ids[i]);
    offsets[i] = at;
    if (axis == 0) {
      out.middleRows(at, v.rows()) = v;
      at += v.rows();
    } else {
      out.middleCols(at, v.cols()) = v;
      at += v.cols();
    }
  }
  return g.make(std::move(out), ids,
                [ids, offsets, axis](Graph& g, int self) {
                  const Mat& go = g.node(self).grad;
                  for (std::size_t i = 0; i < ids.size(); ++i) {
                    if (!g.wants_grad(ids[i])) continue;
                    const Mat& v = g.val(ids[i]);
                    if (axis == 0) {
                      g.grad_buf(ids[i]) += go.middleRows(offsets[i], v.rows());
                    } else {
                      g.grad_buf(ids[i]) += go.middleCols(offsets[i], v.cols());
                    }
                  }
                },
                "concat");
}

Tensor concat(std::initializer_list<Tensor> parts, int axis) {
  std::vector<Tensor> v(parts);
  return concat(std::span<const Tensor>(v), axis);
}

Tensor tanh(const Tensor& x) {
  Graph& g = x.graph();
  int ix = x.id();
  Mat y = x.value().array().tanh().matrix();
  return g.make(std::move(y), {ix},
                [ix](Graph& g, int self) {
                  if (!g.wants_grad(ix)) return;
                  const Mat& y = g.val(self);
                  const Mat& go = g.node(self).grad;
                  g.grad_buf(ix) +=
                      go.cwiseProduct((1.0 - y.array().square()).matrix());
                },
                "tanh");
}

Tensor sigmoid(const Tensor& x) {
  Graph& g = x.graph();
  int ix = x.id();
  Mat y = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
  return g.make(std::move(y), {ix},
                [ix](Graph& g, int self) {
                  if (!g.wants_grad(ix)) return;
                  const Mat& y = g.val(self);
                  const Mat& go = g.node(self).grad;
                  g.grad_buf(ix) += go.cwiseProduct((y.array() * (1.0 - y.array())).matrix());
                },
                "sigmoid");
}

Tensor exp(const Tensor& x) {
  Graph& g = x.graph();
  int ix = x.id();
  Mat y = x.value().array().exp().matrix();
  return g.make(std::move(y), {ix},
                [ix](Graph& g, int self) {
                  if (!g.wants_grad(ix)) return;
                  g.grad_buf(ix) += g.node(self).grad.cwiseProduct(g.val(self));
                },
                "exp");
}

Tensor log(const Tensor& x) {
  Graph& g = x.graph();
  const Mat& v = x.value();
  if ((v.array() <= 0.0).any()) {
    throw DomainError("log: nonpositive entry (min " + std::to_string(v.minCoeff()) + ")");
  }
  int ix = x.id();
  return g.make(v.array().log().matrix(), {ix},
                [ix](Graph& g, int self) {
                  if (!g.wants_grad(ix)) return;
                  g.grad_buf(ix) += g.node(self).grad.cwiseQuotient(g.val(ix));
                },
                "log");
}

Tensor softmax(const Tensor& x, int axis) {
  if (axis != 0 && axis != 1) throw ShapeError("softmax", "axis must be 0 or 1");
  Graph& g = x.graph();
  const Mat& v = x.value();
  Mat y(v.rows(), v.cols());
  if (axis == 1) {
    for (Index r = 0; r < v.rows(); ++r) {
      Eigen::ArrayXd e = (v.row(r).array() - v.row(r).maxCoeff()).exp();
      y.row(r) = (e / e.sum()).matrix();
    }
  } else {
    for (Index c = 0; c < v.cols(); ++c) {
      Eigen::ArrayXd e = (v.col(c).array() - v.col(c).maxCoeff()).exp();
      y.col(c) = (e / e.sum()).matrix();
    }
  }
  int ix = x.id();
  return g.make(std::move(y), {ix},
                [ix, axis](Graph& g, int self) {
                  if (!g.wants_grad(ix)) return;
                  const Mat& y = g.val(self);
                  const Mat& go = g.node(self).grad;
                  Mat& gx = g.grad_buf(ix);
                  // d x_i = y_i * (g_i - sum_j g_j y_j) per slice
                  if (axis == 1) {
                    for (Index r = 0; r < y.rows(); ++r) {
                      Scalar dot = go.row(r).dot(y.row(r));
                      gx.row(r) += y.row(r).cwiseProduct(go.row(r) - Mat::Constant(1, y.cols(), dot));
                    }
                  } else {
                    for (Index c = 0; c < y.cols(); ++c) {
                      Scalar dot = go.col(c).dot(y.col(c));
                      gx.col(c) += y.col(c).cwiseProduct(go.col(c) - Mat::Constant(y.rows(), 1, dot));
                    }
                  }
                },
                "softmax");
}

Tensor max(const Tensor& x, int axis) {
  if (axis != 0 && axis != 1) throw ShapeError("max", "axis must be 0 or 1");
  Graph& g = x.graph();
  const Mat& v = x.value();
  Mat y;
  std::vector<Index> winners;
  if (axis == 1) {
    y.resize(v.rows(), 1);
    winners.resize(static_cast<std::size_t>(v.rows()));
    for (Index r = 0; r < v.rows(); ++r) {
      Index best = 0;
      for (Index c = 1; c < v.cols(); ++c) {
        if (v(r, c) > v(r, best)) best = c;  // strict: ties keep lowest index
      }
      winners[static_cast<std::size_t>(r)] = best;
      y(r, 0) = v(r, best);
    }
  } else {
    y.resize(1, v.cols());
    winners.resize(static_cast<std::size_t>(v.cols()));
    for (Index c = 0; c < v.cols(); ++c) {
      Index best = 0;
      for (Index r = 1; r < v.rows(); ++r) {
        if (v(r, c) > v(best, c)) best = r;
      }
      winners[static_cast<std::size_t>(c)] = best;
      y(0, c) = v(best, c);
    }
  }
  int ix = x.id();
  return g.make(std::move(y), {ix},
                [ix, axis, winners](Graph& g, int self) {
                  if (!g.wants_grad(ix)) return;
                  const Mat& go = g.node(self).grad;
                  Mat& gx = g.grad_buf(ix);
                  if (axis == 1) {
                    for (Index r = 0; r < go.rows(); ++r) {
                      gx(r, winners[static_cast<std::size_t>(r)]) += go(r, 0);
                    }
                  } else {
                    for (Index c = 0; c < go.cols(); ++c) {
                      gx(winners[static_cast<std::size_t>(c)], c) += go(0, c);
                    }
                  }
                },
                "max");
}

Tensor tile(const Tensor& x, int axis, Index count) {
  if (axis != 0 && axis != 1) throw ShapeError("tile", "axis must be 0 or 1");
  if (count < 1) throw ShapeError("tile", "count must be >= 1");
  Graph& g = x.graph();
  const Mat& v = x.value();
  Mat out;
  if (axis == 0) {
    out.resize(v.rows() * count, v.cols());
    for (Index k = 0; k < count; ++k) out.middleRows(k * v.rows(), v.rows()) = v;
  } else {
    out.resize(v.rows(), v.cols() * count);
    for (Index k = 0; k < count; ++k) out.middleCols(k * v.cols(), v.cols()) = v;
  }
  int ix = x.id();
  return g.make(std::move(out), {ix},
                [ix, axis, count](Graph& g, int self) {
                  if (!g.wants_grad(ix)) return;
                  const Mat& go = g.node(self).grad;
                  Mat& gx = g.grad_buf(ix);
                  if (axis == 0) {
                    for (Index k = 0; k < count; ++k) {
                      gx += go.middleRows(k * gx.rows(), gx.rows());
                    }
                  } else {
                    for (Index k = 0; k < count; ++k) {
                      gx += go.middleCols(k * gx.cols(), gx.cols());
                    }
                  }
                },
                "tile");
}

Tensor slice(const Tensor& x, Index r0, Index r1, Index c0, Index c1) {
  Graph& g = x.graph();
  const Mat& v = x.value();
  if (r0 < 0 || c0 < 0 || r1 > v.rows() || c1 > v.cols() || r0 >= r1 || c0 >= c1) {
    throw ShapeError("slice", "range [" + std::to_string(r0) + "," + std::to_string(r1) + ")x[" +
                                  std::to_string(c0) + "," + std::to_string(c1) +
                                  ") out of bounds for " + shape_str(v));
  }
  int ix = x.id();
  return g.make(v.block(r0, c0, r1 - r0, c1 - c0), {ix},
                [ix, r0, c0](Graph& g, int self) {
                  if (!g.wants_grad(ix)) return;
                  const Mat& go = g.node(self).grad;
                  g.grad_buf(ix).block(r0, c0, go.rows(), go.cols()) += go;
                },
                "slice");
}

Tensor embedding(const Tensor& table, std::vector<int> ids) {
  Graph& g = table.graph();
  const Mat& t = table.value();
  Mat out(static_cast<Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) {
      throw ShapeError("embedding", "id " + std::to_string(ids[i]) + " out of range for " +
                                        shape_str(t) + " table");
    }
    out.row(static_cast<Index>(i)) = t.row(ids[i]);
  }
  int it = table.id();
  return g.make(std::move(out), {it},
                [it, ids = std::move(ids)](Graph& g, int self) {
                  if (!g.wants_grad(it)) return;
                  const Mat& go = g.node(self).grad;
                  Mat& gt = g.grad_buf(it);
                  for (std::size_t i = 0; i < ids.size(); ++i) {
                    gt.row(ids[i]) += go.row(static_cast<Index>(i));
                  }
                },
                "embedding");
}

Tensor dropout(const Tensor& x, Scalar p) {
  if (p < 0.0 || p >= 1.0) throw ShapeError("dropout", "p must be in [0,1)");
  Graph& g = x.graph();
  int ix = x.id();
  if (!g.training || p == 0.0) {
    // Identity in evaluation mode.
    return g.make(x.value(), {ix},
                  [ix](Graph& g, int self) {
                    if (g.wants_grad(ix)) g.grad_buf(ix) += g.node(self).grad;
                  },
                  "dropout");
  }
  const Mat& v = x.value();
  Mat mask(v.rows(), v.cols());
  const Scalar keep = 1.0 - p;
  for (Index r = 0; r < v.rows(); ++r) {
    for (Index c = 0; c < v.cols(); ++c) {
      mask(r, c) = g.rng().bernoulli(keep) ? 1.0 / keep : 0.0;
    }
  }
  return g.make(v.cwiseProduct(mask), {ix},
                [ix, mask](Graph& g, int self) {
                  if (g.wants_grad(ix)) g.grad_buf(ix) += g.node(self).grad.cwiseProduct(mask);
                },
                "dropout");
}

// --- helpers ---

Tensor rows(const Tensor& x, Index r0, Index r1) { return slice(x, r0, r1, 0, x.cols()); }
Tensor row(const Tensor& x, Index r) { return slice(x, r, r + 1, 0, x.cols()); }
Tensor cols(const Tensor& x, Index c0, Index c1) { return slice(x, 0, x.rows(), c0, c1); }

Tensor sum(const Tensor& x) {
  Graph& g = x.graph();
  Tensor ones_l = g.constant(Mat::Ones(1, x.rows()));
  Tensor ones_r = g.constant(Mat::Ones(x.cols(), 1));
  return matmul(matmul(ones_l, x), ones_r);
}

Tensor mean_rows(const Tensor& x) {
  Graph& g = x.graph();
  Tensor w = g.constant(Mat::Constant(1, x.rows(), 1.0 / static_cast<Scalar>(x.rows())));
  return matmul(w, x);
}

Tensor scale(const Tensor& x, Scalar s) {
  Graph& g = x.graph();
  return cmul(x, g.constant(Mat::Constant(x.rows(), x.cols(), s)));
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor to_row(const Tensor& col) {
  if (col.cols() != 1) throw ShapeError("to_row", "expected Nx1, got " + shape_str(col.value()));
  if (col.rows() == 1) return slice(col, 0, 1, 0, 1);
  std::vector<Tensor> parts;
  parts.reserve(static_cast<std::size_t>(col.rows()));
  for (Index r = 0; r < col.rows(); ++r) parts.push_back(slice(col, r, r + 1, 0, 1));
  return concat(std::span<const Tensor>(parts), 1);
}

}  // namespace krd
