#include "keyreader/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace krd::gradcheck {

namespace {

Scalar run_loss(const std::function<Tensor(Graph&)>& build, std::uint64_t graph_seed) {
  Graph g(graph_seed);
  return build(g).item();
}

}  // namespace

Report check(const std::vector<Parameter*>& params, const std::function<Tensor(Graph&)>& build,
             Scalar step, int samples_per_param, std::uint64_t seed, std::uint64_t graph_seed) {
  Report report;
  // Analytic pass.
  Graph g(graph_seed);
  Tensor loss = build(g);
  g.backward(loss);
  std::vector<Mat> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) {
    bool found = false;
    for (const auto& [bp, id] : g.bound_params()) {
      if (bp == p) {
        analytic.push_back(g.node(id).grad_live ? g.node(id).grad
                                                : Mat::Zero(p->value.rows(), p->value.cols()));
        found = true;
        break;
      }
    }
    if (!found) {
      analytic.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }

  Rng pick(seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    const Index n = p.value.size();
    std::vector<Index> entries;
    if (n <= samples_per_param) {
      for (Index i = 0; i < n; ++i) entries.push_back(i);
    } else {
      for (int k = 0; k < samples_per_param; ++k) {
        entries.push_back(static_cast<Index>(pick.uniform_int(static_cast<std::uint64_t>(n))));
      }
    }
    for (Index flat : entries) {
      const Index r = flat / p.value.cols();
      const Index c = flat % p.value.cols();
      const Scalar saved = p.value(r, c);
      p.value(r, c) = saved + step;
      const Scalar up = run_loss(build, graph_seed);
      p.value(r, c) = saved - step;
      const Scalar down = run_loss(build, graph_seed);
      p.value(r, c) = saved;
      const Scalar fd = (up - down) / (2.0 * step);
      const Scalar an = analytic[pi](r, c);
      const Scalar rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-2});
      ++report.entries_checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = p.name + "[" + std::to_string(r) + "," + std::to_string(c) + "]";
      }
    }
  }
  return report;
}

}  // namespace krd::gradcheck
