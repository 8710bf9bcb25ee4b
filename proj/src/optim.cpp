#include "keyreader/optim.hpp"

#include <algorithm>
#include <cmath>

#include "keyreader/graph.hpp"

namespace krd {

Parameter& ParamStore::create(const std::string& name, Index rows, Index cols, Init init,
                              Rng& rng) {
  Mat v(rows, cols);
  switch (init) {
    case Init::kZero:
      v.setZero();
      break;
    case Init::kGlorotUniform: {
      const Scalar bound = std::sqrt(6.0 / static_cast<Scalar>(rows + cols));
      for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) v(r, c) = rng.uniform(-bound, bound);
      }
      break;
    }
  }
  return create_from(name, std::move(v));
}

Parameter& ParamStore::create_from(const std::string& name, Mat value) {
  if (by_name_.count(name)) {
    throw ConfigError("duplicate parameter name: " + name);
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = std::move(value);
  p->reset_optimizer_state();
  Parameter* raw = p.get();
  params_.push_back(std::move(p));
  by_name_[name] = raw;
  return *raw;
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ConfigError("unknown parameter: " + name);
  return *it->second;
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ConfigError("unknown parameter: " + name);
  return *it->second;
}

std::vector<std::string> ParamStore::names_sorted() const {
  std::vector<std::string> names;
  names.reserve(params_.size());
  for (const auto& p : params_) names.push_back(p->name);
  std::sort(names.begin(), names.end());
  return names;
}

void GradAccumulator::accumulate(const Graph& g) {
  for (const auto& [param, id] : g.bound_params()) {
    const GraphNode& n = g.node(id);
    if (!n.grad_live) continue;  // parameter not reached by this loss
    if (!n.grad.allFinite()) {
      throw DomainError("non-finite gradient for parameter '" + param->name + "'");
    }
    auto it = grads_.find(param);
    if (it == grads_.end()) {
      grads_.emplace(param, n.grad);
    } else {
      it->second += n.grad;
    }
  }
}

void GradAccumulator::scale_all(Scalar s) {
  for (auto& [p, gmat] : grads_) gmat *= s;
}

void adadelta_update(Mat& value, const Mat& grad, Mat& accum_grad, Mat& accum_update, Scalar rho,
                     Scalar eps) {
  accum_grad = rho * accum_grad + (1.0 - rho) * grad.cwiseProduct(grad);
  Mat update = -((accum_update.array() + eps).sqrt() / (accum_grad.array() + eps).sqrt() *
                 grad.array())
                    .matrix();
  accum_update = rho * accum_update + (1.0 - rho) * update.cwiseProduct(update);
  value += update;
}

void AdaDelta::step(const GradAccumulator& acc) const {
  // Validate the whole batch before touching any parameter.
  for (const auto& [param, grad] : acc.grads()) {
    if (!grad.allFinite()) {
      throw DomainError("non-finite gradient for parameter '" + param->name + "'");
    }
  }
  for (const auto& [param, grad] : acc.grads()) {
    if (!param->trainable) continue;
    auto* p = const_cast<Parameter*>(param);
    adadelta_update(p->value, grad, p->accum_grad, p->accum_update, rho, eps);
  }
}

}  // namespace krd
