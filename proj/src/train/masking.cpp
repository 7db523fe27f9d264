#include "train/masking.hpp"

#include "core/error.hpp"
#include "data/tokenizer.hpp"

namespace eie {

namespace {

int count_ordinary(const std::vector<int>& tokens) {
  int n = 0;
  for (int t : tokens) n += Vocabulary::is_word_id(t) ? 1 : 0;
  return n;
}

int random_word_id(Rng& rng, int vocab_size) {
  const int words = vocab_size - SpecialTokens::kFirstWordId;
  return SpecialTokens::kFirstWordId + static_cast<int>(rng.next_below(static_cast<uint64_t>(words)));
}

}  // namespace

std::optional<MaskingOutcome> bert_mask_attempt(const std::vector<int>& tokens, Rng& rng,
                                                double mask_rate, int vocab_size) {
  if (count_ordinary(tokens) == 0) {
    throw UsageError("bert_mask: sequence has no ordinary word positions");
  }
  if (vocab_size <= SpecialTokens::kFirstWordId) {
    throw UsageError("bert_mask: vocabulary has no word ids");
  }
  MaskingOutcome out;
  out.targets = tokens;
  out.input_ids = tokens;
  out.loss_mask.assign(tokens.size(), 0);
  bool any = false;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (!Vocabulary::is_word_id(tokens[i])) continue;
    if (rng.uniform() >= mask_rate) continue;
    any = true;
    out.loss_mask[i] = 1;
    const double u = rng.uniform();
    if (u < 0.8) {
      out.input_ids[i] = SpecialTokens::kMask;
    } else if (u < 0.9) {
      out.input_ids[i] = random_word_id(rng, vocab_size);
    }  // else: left unchanged
  }
  if (!any) return std::nullopt;
  return out;
}

MaskingOutcome bert_mask(const std::vector<int>& tokens, Rng& rng, double mask_rate,
                         int vocab_size) {
  int attempts = 0;
  for (;;) {
    ++attempts;
    auto out = bert_mask_attempt(tokens, rng, mask_rate, vocab_size);
    if (out) {
      out->attempts = attempts;
      return *out;
    }
  }
}

EntityLexicon EntityLexicon::from_phrases(const std::vector<std::string>& phrases,
                                          const Vocabulary& vocab) {
  EntityLexicon lex;
  for (const auto& phrase : phrases) {
    for (const auto& word : tokenize(phrase)) {
      if (vocab.contains(word)) lex.word_ids.insert(vocab.id(word));
    }
  }
  return lex;
}

MaskingOutcome entity_mask(const std::vector<int>& tokens, const EntityLexicon& lexicon, Rng& rng,
                           double mask_rate, int vocab_size) {
  MaskingOutcome out;
  out.targets = tokens;
  out.input_ids = tokens;
  out.loss_mask.assign(tokens.size(), 0);
  bool any = false;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (!Vocabulary::is_word_id(tokens[i]) || !lexicon.contains(tokens[i])) continue;
    any = true;
    out.loss_mask[i] = 1;
    out.input_ids[i] = SpecialTokens::kMask;
  }
  if (!any) {
    out = bert_mask(tokens, rng, mask_rate, vocab_size);
    out.fallback = true;
  }
  return out;
}

}  // namespace eie
