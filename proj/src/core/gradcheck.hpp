#pragma once

#include <functional>
#include <string>

#include "core/tensor.hpp"

namespace eie {

// Compares the taped gradient of a scalar function against central finite
// differences. Returns the maximum over checked coordinates of
//   |analytic - central| / (max(|central|, gradient_floor) + 1e-8).
//
// With gradient_floor = 0 this is the plain relative error. A nonzero floor
// turns the comparison into an absolute one for near-zero gradients: a single
// float32 rounding of an O(1) output already perturbs the central difference
// by ~6e-8/(2*eps) = 3e-5 at eps=1e-3, and the O(eps^2) truncation term blows
// up the ratio as the true gradient approaches zero, so relative agreement
// below |grad| ~ 0.03 certifies nothing even for a correct backward. Checks
// that involve zero-crossing Jacobians (softmax, layer norm, attention
// scores) pass a floor of that order; scale errors at small coordinates are
// still caught because the absolute disagreement they cause exceeds
// tolerance * floor.
//
// coord_stride checks every k-th coordinate (1 = all); the composed-model
// check uses a stride on large parameter tensors to stay fast.
double finite_diff_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double eps,
                         int coord_stride = 1, double gradient_floor = 0.0);

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_rel_err < tolerance; }
};

}  // namespace eie
