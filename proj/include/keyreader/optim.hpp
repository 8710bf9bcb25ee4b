#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "keyreader/types.hpp"

namespace krd {

class Graph;

// A named trainable (or frozen) tensor plus its AdaDelta accumulators.
struct Parameter {
  std::string name;
  Mat value;
  bool trainable = true;
  Mat accum_grad;    // E[g^2], decayed squared gradient
  Mat accum_update;  // E[dx^2], decayed squared update

  void reset_optimizer_state() {
    accum_grad = Mat::Zero(value.rows(), value.cols());
    accum_update = Mat::Zero(value.rows(), value.cols());
  }
};

enum class Init { kZero, kGlorotUniform };

// Owns parameters; addresses are stable for the store's lifetime.
class ParamStore {
 public:
  // Glorot bound uses fan_in = cols, fan_out = rows of the stored matrix.
  Parameter& create(const std::string& name, Index rows, Index cols, Init init, Rng& rng);
  Parameter& create_from(const std::string& name, Mat value);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return by_name_.count(name) > 0; }

  // Names in sorted order (used for deterministic serialization).
  std::vector<std::string> names_sorted() const;
  std::size_t size() const { return params_.size(); }

  template <class Fn>
  void for_each(Fn&& fn) {
    for (auto& p : params_) fn(*p);
  }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> by_name_;
};

// Sums node gradients into per-parameter buffers; one buffer survives
// across the per-example graphs of a batch.
class GradAccumulator {
 public:
  // Pulls grads of every parameter bound in `g` (after g.backward()).
  // Throws DomainError naming the parameter if a gradient has a NaN.
  void accumulate(const Graph& g);
  bool has(const Parameter& p) const { return grads_.count(&p) > 0; }
  const Mat& grad(const Parameter& p) const { return grads_.at(&p); }
  void scale_all(Scalar s);
  void clear() { grads_.clear(); }

  const std::unordered_map<const Parameter*, Mat>& grads() const { return grads_; }

 private:
  std::unordered_map<const Parameter*, Mat> grads_;
};

// Standard AdaDelta update on one tensor. Exposed standalone so a
// single-step oracle can drive it directly.
void adadelta_update(Mat& value, const Mat& grad, Mat& accum_grad, Mat& accum_update, Scalar rho,
                     Scalar eps);

struct AdaDelta {
  Scalar rho = 0.95;
  Scalar eps = 1e-6;

  // Applies one update to every trainable parameter with an accumulated
  // gradient. Throws DomainError naming the parameter on NaN gradients;
  // no parameter is modified in that case.
  void step(const GradAccumulator& acc) const;
};

}  // namespace krd
