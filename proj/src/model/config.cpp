#include "model/config.hpp"

namespace eie {

nlohmann::json ModelConfig::to_json() const {
  return {{"hidden_dim", hidden_dim},
          {"num_heads", num_heads},
          {"egdcm_layers", egdcm_layers},
          {"generator_layers", generator_layers},
          {"feature_dim", feature_dim},
          {"image_tokens_per_xray", image_tokens_per_xray},
          {"guidance_dim", guidance_dim},
          {"vocab_size", vocab_size},
          {"max_text_len", max_text_len},
          {"ffn_multiplier", ffn_multiplier}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.egdcm_layers = j.value("egdcm_layers", c.egdcm_layers);
  c.generator_layers = j.value("generator_layers", c.generator_layers);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.image_tokens_per_xray = j.value("image_tokens_per_xray", c.image_tokens_per_xray);
  c.guidance_dim = j.value("guidance_dim", c.guidance_dim);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.max_text_len = j.value("max_text_len", c.max_text_len);
  c.ffn_multiplier = j.value("ffn_multiplier", c.ffn_multiplier);
  return c;
}

}  // namespace eie
