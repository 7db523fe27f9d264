#pragma once

#include <vector>

#include "model/params.hpp"

namespace eie {

// How guidance probabilities enter the model. off feeds exact zero vectors
// into the guidance slots (the probabilities are never read); soft projects
// them directly; hard binarizes at the threshold first.
struct GuidancePath {
  enum class Mode { off, soft, hard };
  Mode mode = Mode::off;
  float threshold = 0.5f;
};

// Single affine map of a probability vector into token space. p is [1 x gd].
Tensor project_guidance(const Tensor& p, const ModelParameters& m);

// Elementwise threshold: 1.0 where p >= threshold (ties count as positive).
Tensor binarize_guidance(const Tensor& p, float threshold);

// [1 x hidden] guidance token for one image, or exact zeros when off.
Tensor guidance_token(const std::vector<float>& p, const GuidancePath& g,
                      const ModelParameters& m);

// Eq.-style token assembly: [Xray1], projected baseline grid, g_b, [Xray2],
// projected follow-up grid, g_f — each with positional and type embeddings.
// Returns [egdcm_seq_len x hidden].
Tensor assemble_image_tokens(const Tensor& features_b, const Tensor& features_f,
                             const Tensor& g_b, const Tensor& g_f, const ModelParameters& m);

// Difference-capture encoder: full bidirectional self-attention over the
// assembled tokens, pre-norm layers, final layer norm.
Tensor egdcm_forward(const Tensor& tokens, const ModelParameters& m);

// Summary generator over [difference tokens ‖ embedded text]. Image and
// guidance positions attend only among themselves; text position i attends
// to the image block and to text positions <= i. Returns next-token logits
// for every text position, [T x vocab]: row i scores the token at text
// position i + 1.
Tensor generator_logits(const Tensor& diff_tokens, const std::vector<int>& text_ids,
                        const ModelParameters& m);

// Full pipeline for one record.
Tensor forward_full(const Tensor& features_b, const Tensor& features_f,
                    const std::vector<float>& p_b, const std::vector<float>& p_f,
                    const std::vector<int>& text_ids, const GuidancePath& g,
                    const ModelParameters& m);

// [CLS], [BOS], words..., [EOS]
std::vector<int> text_token_ids(const std::string& summary, const Vocabulary& vocab,
                                int max_text_len);

}  // namespace eie
