#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/tensor.hpp"

namespace eie {

struct AdamConfig {
  float lr = 3e-5f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// First/second moment buffers keyed by parameter name, plus the shared step
// counter. Buffers are created lazily (zero-initialized) on first update.
struct AdamState {
  int64_t step = 0;
  std::unordered_map<std::string, std::vector<float>> m;
  std::unordered_map<std::string, std::vector<float>> v;
};

// One bias-corrected Adam update over the given (name, parameter) pairs.
// Parameters without an allocated gradient buffer are treated as grad 0.
// Increments state.step once per call.
void adam_step(std::vector<std::pair<std::string, Tensor>>& params, AdamState& state,
               const AdamConfig& cfg);

}  // namespace eie
