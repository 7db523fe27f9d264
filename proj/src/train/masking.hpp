#pragma once

#include <optional>
#include <unordered_set>
#include <vector>

#include "core/rng.hpp"
#include "data/vocab.hpp"

namespace eie {

struct MaskingOutcome {
  std::vector<int> input_ids;      // corrupted token stream fed to the model
  std::vector<uint8_t> loss_mask;  // true at selected positions only
  std::vector<int> targets;        // original token ids
  int attempts = 1;                // Bernoulli sweeps until one selected
  bool fallback = false;           // entity_mask reverted to bert_mask
};

// One Bernoulli sweep of the BERT masking rule: every ordinary word position
// is selected independently with probability mask_rate; selected positions
// are corrupted 80% to [MASK], 10% to a random word id, 10% left unchanged.
// Returns nullopt when the sweep selected nothing. Exposed so statistical
// tests can measure the unconditioned selection process.
std::optional<MaskingOutcome> bert_mask_attempt(const std::vector<int>& tokens, Rng& rng,
                                                double mask_rate, int vocab_size);

// The training-facing rule: resamples whole sweeps until at least one
// position is selected. Structural tokens are never selected.
MaskingOutcome bert_mask(const std::vector<int>& tokens, Rng& rng, double mask_rate,
                         int vocab_size);

// Entity word ids for masked entity modeling. Multi-word phrases contribute
// their constituent word tokens; phrases missing from the vocabulary are
// dropped.
struct EntityLexicon {
  std::unordered_set<int> word_ids;

  static EntityLexicon from_phrases(const std::vector<std::string>& phrases,
                                    const Vocabulary& vocab);
  bool contains(int id) const { return word_ids.count(id) > 0; }
  bool empty() const { return word_ids.empty(); }
};

// Masks every position whose token is in the lexicon (always with [MASK]).
// Sentences without any entity word fall back to bert_mask.
MaskingOutcome entity_mask(const std::vector<int>& tokens, const EntityLexicon& lexicon, Rng& rng,
                           double mask_rate, int vocab_size);

}  // namespace eie
