#pragma once

#include <filesystem>
#include <string>

#include "data/dataset.hpp"
#include "model/eie_model.hpp"
#include "train/masking.hpp"

namespace eie {

enum class Variant { base, mem, esg, all, light };

Variant variant_from_string(const std::string& s);
std::string variant_to_string(Variant v);

struct TrainingConfig {
  Variant variant = Variant::all;
  double alpha = 0.8;  // MLM is taken when r <= alpha, MEM when r > alpha
  double beta = 0.6;   // EIE-light: guidance zeroed when r < beta
  GuidancePath::Mode guidance_mode = GuidancePath::Mode::soft;
  float guidance_threshold = 0.5f;
  float lr = 3e-5f;
  int64_t total_iterations = 5000;
  int batch_size = 4;
  uint64_t seed = 1;
  double mask_rate = 0.15;
  int64_t checkpoint_every = 0;  // 0 = final checkpoint only

  bool uses_guidance() const {
    return variant == Variant::esg || variant == Variant::all || variant == Variant::light;
  }
  bool uses_mem() const {
    return variant == Variant::mem || variant == Variant::all || variant == Variant::light;
  }
  void validate() const;
  nlohmann::json to_json() const;
  static TrainingConfig from_json(const nlohmann::json& j);
};

enum class Branch { mlm, mem, mem_fallback };
std::string branch_to_string(Branch b);

// r ~ U(0,1); MEM iff r > alpha.
Branch select_loss_branch(Rng& rng, double alpha);

// EIE-light training-time dropout: one draw per iteration, shared by both
// images. Returns true when guidance stays enabled (r >= beta).
bool guidance_dropout_keep(Rng& rng, double beta);

// Derivation of per-iteration random streams; pure function of
// (seed, purpose, iteration), which is what makes resume exact.
Rng iteration_stream(uint64_t seed, const char* purpose, int64_t iteration);

struct StepResult {
  double loss = 0.0;
  Branch branch = Branch::mlm;
  bool guidance_enabled = false;
};

// One optimization step over a batch of record indices: branch selection,
// masking, guidance path, forward, masked cross entropy (plus the
// end-of-sequence transition, which is always supervised so decoding learns
// to stop), backward, Adam update.
StepResult train_step(const Dataset& ds, const std::vector<size_t>& batch,
                      ModelParameters& params, AdamState& adam, const TrainingConfig& cfg,
                      const Vocabulary& vocab, const EntityLexicon& lexicon, int64_t iteration);

struct TrainOptions {
  std::filesystem::path out_dir;
  std::filesystem::path resume_from;  // empty = fresh start
};

// Runs the full loop; writes loss.csv and checkpoint directories under
// out_dir; returns the final checkpoint path.
std::filesystem::path train_loop(const Dataset& ds, const ModelConfig& model_cfg,
                                 const TrainingConfig& cfg, const TrainOptions& opts);

}  // namespace eie
