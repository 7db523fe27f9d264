#include "model/eie_model.hpp"

#include "core/ops.hpp"
#include "data/tokenizer.hpp"

namespace eie {

namespace {

Tensor transformer_layer(const Tensor& x, const LayerParams& p, int num_heads,
                         const AttnMask& mask) {
  Tensor h = layer_norm(x, p.ln1_gamma, p.ln1_beta);
  Tensor q = bias_add(matmul(h, p.wq), p.bq);
  Tensor k = bias_add(matmul(h, p.wk), p.bk);
  Tensor v = bias_add(matmul(h, p.wv), p.bv);
  Tensor ctx = attention_heads(q, k, v, num_heads, mask);
  Tensor x1 = add(x, bias_add(matmul(ctx, p.wo), p.bo));
  Tensor h2 = layer_norm(x1, p.ln2_gamma, p.ln2_beta);
  Tensor f = bias_add(matmul(gelu(bias_add(matmul(h2, p.ffn_w1), p.ffn_b1)), p.ffn_w2), p.ffn_b2);
  return add(x1, f);
}

Tensor positional_rows(const ModelParameters& m, int start, int len) {
  return slice(m.positional, 0, start, len);
}

Tensor type_row(const ModelParameters& m, int type) { return slice(m.type_embedding, 0, type, 1); }

}  // namespace

Tensor project_guidance(const Tensor& p, const ModelParameters& m) {
  if (p.rank() != 2 || p.dim(0) != 1 || p.dim(1) != m.cfg.guidance_dim) {
    throw UsageError("project_guidance: expected [1x" + std::to_string(m.cfg.guidance_dim) +
                     "], got " + shape_str(p.shape()));
  }
  return bias_add(matmul(p, m.guidance_w), m.guidance_b);
}

Tensor binarize_guidance(const Tensor& p, float threshold) {
  if (threshold <= 0.0f || threshold >= 1.0f) {
    throw UsageError("binarize_guidance: threshold must lie in (0, 1)");
  }
  Tensor out = Tensor::zeros(p.shape());
  auto ov = out.mutable_data();
  auto pv = p.data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = pv[i] >= threshold ? 1.0f : 0.0f;
  return out;
}

Tensor guidance_token(const std::vector<float>& p, const GuidancePath& g,
                      const ModelParameters& m) {
  if (g.mode == GuidancePath::Mode::off) return Tensor::zeros({1, m.cfg.hidden_dim});
  if (static_cast<int>(p.size()) != m.cfg.guidance_dim) {
    throw DataError("guidance vector length " + std::to_string(p.size()) +
                    " does not match guidance_dim " + std::to_string(m.cfg.guidance_dim));
  }
  Tensor pt = Tensor::from_data({1, m.cfg.guidance_dim}, std::vector<float>(p.begin(), p.end()));
  if (g.mode == GuidancePath::Mode::hard) pt = binarize_guidance(pt, g.threshold);
  return project_guidance(pt, m);
}

Tensor assemble_image_tokens(const Tensor& features_b, const Tensor& features_f,
                             const Tensor& g_b, const Tensor& g_f, const ModelParameters& m) {
  const ModelConfig& cfg = m.cfg;
  for (const Tensor* feat : {&features_b, &features_f}) {
    if (feat->rank() != 2 || feat->dim(0) != cfg.image_tokens_per_xray ||
        feat->dim(1) != cfg.feature_dim) {
      throw DataError("image features must be [" + std::to_string(cfg.image_tokens_per_xray) + "x" +
                      std::to_string(cfg.feature_dim) + "], got " + shape_str(feat->shape()));
    }
  }
  const int nv = cfg.image_tokens_per_xray;
  const int block = nv + 2;

  auto image_block = [&](const Tensor& features, const Tensor& g, int type, int pos0) {
    Tensor xray_tok = embedding_gather(m.word_embedding,
                                       {type == 0 ? SpecialTokens::kXray1 : SpecialTokens::kXray2});
    Tensor grid = bias_add(matmul(features, m.image_w), m.image_b);
    Tensor tokens = concat({xray_tok, grid, g}, 0);
    tokens = add(tokens, positional_rows(m, pos0, block));
    return bias_add(tokens, type_row(m, type));
  };

  Tensor base = image_block(features_b, g_b, 0, 0);
  Tensor follow = image_block(features_f, g_f, 1, block);
  return concat({base, follow}, 0);
}

Tensor egdcm_forward(const Tensor& tokens, const ModelParameters& m) {
  AttnMask full{};
  Tensor x = tokens;
  for (const LayerParams& layer : m.egdcm) x = transformer_layer(x, layer, m.cfg.num_heads, full);
  return layer_norm(x, m.egdcm_ln_gamma, m.egdcm_ln_beta);
}

Tensor generator_logits(const Tensor& diff_tokens, const std::vector<int>& text_ids,
                        const ModelParameters& m) {
  const int t = static_cast<int>(text_ids.size());
  if (t < 2) throw UsageError("generator: text must start with [CLS] [BOS]");
  if (t > m.cfg.max_text_block()) {
    throw UsageError("generator: text block length " + std::to_string(t) + " exceeds max " +
                     std::to_string(m.cfg.max_text_block()));
  }
  Tensor text = embedding_gather(m.word_embedding, text_ids);
  text = add(text, positional_rows(m, 0, t));
  text = bias_add(text, type_row(m, 2));

  Tensor x = concat({diff_tokens, text}, 0);
  AttnMask mask{AttnMask::Kind::image_prefix_causal, diff_tokens.dim(0)};
  for (const LayerParams& layer : m.generator) {
    x = transformer_layer(x, layer, m.cfg.num_heads, mask);
  }
  Tensor text_out = slice(x, 0, diff_tokens.dim(0), t);
  text_out = layer_norm(text_out, m.gen_ln_gamma, m.gen_ln_beta);
  return bias_add(matmul(text_out, m.head_w), m.head_b);
}

Tensor forward_full(const Tensor& features_b, const Tensor& features_f,
                    const std::vector<float>& p_b, const std::vector<float>& p_f,
                    const std::vector<int>& text_ids, const GuidancePath& g,
                    const ModelParameters& m) {
  Tensor g_b = guidance_token(p_b, g, m);
  Tensor g_f = guidance_token(p_f, g, m);
  Tensor tokens = assemble_image_tokens(features_b, features_f, g_b, g_f, m);
  Tensor diff = egdcm_forward(tokens, m);
  return generator_logits(diff, text_ids, m);
}

std::vector<int> text_token_ids(const std::string& summary, const Vocabulary& vocab,
                                int max_text_len) {
  std::vector<std::string> words = tokenize(summary);
  if (static_cast<int>(words.size()) > max_text_len) {
    throw DataError("summary has " + std::to_string(words.size()) + " words, max_text_len is " +
                    std::to_string(max_text_len));
  }
  std::vector<int> ids = {SpecialTokens::kCls, SpecialTokens::kBos};
  for (const auto& w : words) ids.push_back(vocab.id(w));
  ids.push_back(SpecialTokens::kEos);
  return ids;
}

}  // namespace eie
