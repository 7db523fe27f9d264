#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/adam.hpp"
#include "core/tensor.hpp"
#include "data/vocab.hpp"
#include "model/config.hpp"

namespace eie {

struct LayerParams {
  Tensor ln1_gamma, ln1_beta;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln2_gamma, ln2_beta;
  Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

// Every learned weight of the model, addressable by stable names. The
// sinusoidal positional table is part of the struct but is not a trainable
// parameter and never enters the optimizer.
struct ModelParameters {
  ModelConfig cfg;
  Tensor word_embedding;       // [vocab x hidden]
  Tensor type_embedding;       // [3 x hidden]: baseline-image, follow-up-image, text
  Tensor positional;           // fixed sinusoidal, [max_positions x hidden]
  Tensor guidance_w, guidance_b;  // [guidance_dim x hidden], [hidden]
  Tensor image_w, image_b;        // [feature_dim x hidden], [hidden]
  std::vector<LayerParams> egdcm;
  Tensor egdcm_ln_gamma, egdcm_ln_beta;
  std::vector<LayerParams> generator;
  Tensor gen_ln_gamma, gen_ln_beta;
  Tensor head_w, head_b;  // [hidden x vocab], [vocab]

  static ModelParameters init(const ModelConfig& cfg, uint64_t seed);

  // Trainable tensors in a stable order (excludes the positional table).
  std::vector<std::pair<std::string, Tensor>> named() const;
  int64_t trainable_count() const;
  void zero_grad() const;
  bool all_finite() const;
};

Tensor sinusoidal_positional(int positions, int dim);

struct Checkpoint {
  ModelParameters params;
  Vocabulary vocab;
  int64_t step = 0;
  uint64_t seed = 0;
  nlohmann::json train_config;  // echo of the training configuration
  std::optional<AdamState> adam;
};

// Directory layout: manifest.json + vocab.json + params/<name>.eiet, plus
// optimizer moment tensors under opt/ when training state is included.
void save_checkpoint(const std::filesystem::path& dir, const ModelParameters& params,
                     const Vocabulary& vocab, int64_t step, uint64_t seed,
                     const nlohmann::json& train_config, const AdamState* adam);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace eie
