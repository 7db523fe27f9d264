#pragma once

#include <cstdint>
#include <vector>

#include "core/gradcheck.hpp"

namespace eie {

// Finite-difference checks over every primitive op (tolerance 1e-3) and the
// composed model on a 2-record toy batch (tolerance 1e-2). Fixtures are
// conditioned as described in gradcheck.hpp; ops with zero-crossing
// Jacobians use a gradient floor.
std::vector<GradCheckResult> run_gradcheck_suite(uint64_t seed, double eps);

}  // namespace eie
