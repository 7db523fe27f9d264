#pragma once

#include <string>

#include "core/error.hpp"
#include "json.hpp"

namespace eie {

struct ModelConfig {
  int hidden_dim = 512;
  int num_heads = 8;
  int egdcm_layers = 2;
  int generator_layers = 3;
  int feature_dim = 1024;
  int image_tokens_per_xray = 49;
  int guidance_dim = 5;
  int vocab_size = 0;  // filled from the vocabulary
  int max_text_len = 24;
  int ffn_multiplier = 4;

  // [Xray] token + image tokens + guidance slot, for both images.
  int egdcm_seq_len() const { return 2 * (image_tokens_per_xray + 2); }
  int max_text_block() const { return max_text_len + 3; }  // [CLS] [BOS] words [EOS]
  int ffn_dim() const { return hidden_dim * ffn_multiplier; }

  void validate() const {
    if (hidden_dim % num_heads != 0) {
      throw UsageError("model config: hidden_dim " + std::to_string(hidden_dim) +
                       " not divisible by num_heads " + std::to_string(num_heads));
    }
    if (vocab_size <= 0) throw UsageError("model config: vocab_size not set");
    if (egdcm_layers < 1 || generator_layers < 1) {
      throw UsageError("model config: layer counts must be positive");
    }
  }

  bool unusual_guidance_dim() const { return guidance_dim != 5 && guidance_dim != 14; }

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

}  // namespace eie
