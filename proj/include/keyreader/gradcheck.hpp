#pragma once

#include <functional>
#include <string>
#include <vector>

#include "keyreader/graph.hpp"
#include "keyreader/optim.hpp"

namespace krd::gradcheck {

struct Report {
  Scalar max_rel_err = 0.0;
  std::string worst;  // "param[i,j]" of the worst entry
  int entries_checked = 0;

  bool ok(Scalar tol) const { return entries_checked > 0 && max_rel_err < tol; }
};

// Central finite differences against backward(). `build` must construct the
// loss from current parameter values inside the supplied graph; it is called
// repeatedly with graphs seeded identically, so stochastic nodes (dropout)
// replay the same masks and the difference quotient stays well defined.
//
// Relative error uses denominator max(|analytic|, |fd|, 1e-2); the floor
// keeps near-zero gradients from amplifying difference-quotient noise.
Report check(const std::vector<Parameter*>& params,
             const std::function<Tensor(Graph&)>& build, Scalar step = 1e-4,
             int samples_per_param = 8, std::uint64_t seed = 1234,
             std::uint64_t graph_seed = 7);

}  // namespace krd::gradcheck
