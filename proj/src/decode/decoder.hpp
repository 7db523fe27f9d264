#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "data/dataset.hpp"
#include "model/eie_model.hpp"

namespace eie {

struct DecodeConfig {
  enum class Strategy { greedy, beam };
  Strategy strategy = Strategy::greedy;
  int beam_width = 1;
  int max_len = 24;  // generated words, structural tokens excluded
  GuidancePath guidance;

  void validate() const;
};

struct GenerationResult {
  std::vector<int> token_ids;  // word ids only
  std::string text;
};

// Autoregressive generation for one record. Image and guidance
// representations run through the difference encoder once and are reused for
// every step; each step re-scores the current prefix through the generator,
// whose causal layout makes the shared prefix rows bit-identical to a full
// forward pass. Structural tokens are banned from sampling. Deterministic
// given the checkpoint and the record.
GenerationResult generate(const DatasetRecord& rec, const ModelParameters& params,
                          const Vocabulary& vocab, const DecodeConfig& cfg);

struct CorpusGenResult {
  size_t written = 0;
  size_t failed = 0;
};

// Maps generate() over the dataset (parallel across records, output in
// dataset order) and writes {"id", "hypothesis", "reference"} JSONL lines.
// Failing records are logged to stderr and skipped; the caller turns
// failed > 0 into a nonzero exit.
CorpusGenResult generate_corpus(const Dataset& ds, const ModelParameters& params,
                                const Vocabulary& vocab, const DecodeConfig& cfg,
                                const std::filesystem::path& out_jsonl, int threads = 0);

// Default guidance behavior for a checkpoint: EIE-esg/all decode with their
// training-time guidance mode, EIE-light decodes with guidance off (that is
// its contract), base/mem consume no guidance.
GuidancePath default_decode_guidance(const nlohmann::json& train_config);

}  // namespace eie
