#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gappy/tensor.hpp"

namespace gappy {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at worst_index
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;  // one per parameter
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// |a - n| / max(1, |a| + |n|)
double relative_error(double analytic, double numeric);

// Compares the backward pass of `loss_fn` against central differences
// (f(p + h) - f(p - h)) / 2h for every entry of every parameter. `loss_fn`
// must rebuild the graph on each call and return a scalar.
GradCheckReport grad_check(const std::function<Tensor()>& loss_fn, const ParameterList& params, double h = 1e-4,
                           double tol = 1e-3);

}  // namespace gappy
