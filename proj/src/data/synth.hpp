#pragma once

#include <cstdint>

#include "data/dataset.hpp"

namespace eie {

// Synthetic data with a plantable causal chain: each record carries a set of
// (entity, change) facts realized three ways — a templated summary, localized
// additive patterns in the feature grids, and guidance probabilities that
// reflect entity presence with fidelity `informativeness` (1 = perfect
// predictor of non-negated entity mentions, 0 = independent noise).
struct SynthConfig {
  int num_records = 32;
  int guidance_dim = 5;
  double noise = 0.1;            // feature-grid noise stddev
  double informativeness = 1.0;  // per-record probability of truthful guidance
  uint64_t seed = 1;
  int feature_tokens = 49;
  int feature_dim = 1024;
  int max_facts = 3;
};

Dataset synth_generate(const SynthConfig& cfg);

}  // namespace eie
