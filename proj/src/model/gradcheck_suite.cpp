#include "model/gradcheck_suite.hpp"

#include <algorithm>

#include "core/ops.hpp"
#include "model/eie_model.hpp"

namespace eie {

namespace {

constexpr double kOpTolerance = 1e-3;
constexpr double kModelTolerance = 1e-2;
constexpr double kFloor = 0.5;  // zero-crossing Jacobians; see gradcheck.hpp

Tensor uniform_tensor(Shape s, Rng& rng, double lo, double hi) {
  Tensor t = Tensor::zeros(std::move(s));
  for (auto& x : t.mutable_data()) x = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

struct Probe {
  Tensor w;
  Probe(const Shape& s, Rng& rng) { w = uniform_tensor(s, rng, 0.5, 1.5); }
  Tensor operator()(const Tensor& y) const { return sum_all(mul(y, w)); }
};

Tensor layer_norm_input(Shape s, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(s));
  const int d = t.shape().back();
  auto v = t.mutable_data();
  for (size_t i = 0; i < v.size(); ++i) {
    const int j = static_cast<int>(i) % d;
    v[i] = static_cast<float>(rng.uniform(-0.5, 0.5)) + (-0.5f + 1.0f * j / (d - 1));
  }
  return t;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(uint64_t seed, double eps) {
  std::vector<GradCheckResult> results;
  auto check = [&](const char* name, double tolerance, double err) {
    results.push_back({name, err, tolerance});
  };
  Rng root(seed);

  {
    Rng rng = root.split("matmul");
    Tensor a = uniform_tensor({4, 5}, rng, 0.2, 1.0);
    Tensor b = uniform_tensor({5, 3}, rng, 0.2, 1.0);
    Probe p({4, 3}, rng);
    check("matmul.dA", kOpTolerance,
          finite_diff_check([&](const Tensor& x) { return p(matmul(x, b)); }, a, eps));
    check("matmul.dB", kOpTolerance,
          finite_diff_check([&](const Tensor& x) { return p(matmul(a, x)); }, b, eps));
  }
  {
    Rng rng = root.split("add_mul");
    Tensor a = uniform_tensor({3, 4}, rng, -1.0, 1.0);
    Tensor b = uniform_tensor({3, 4}, rng, 0.2, 1.0);
    Probe p({3, 4}, rng);
    check("add", kOpTolerance,
          finite_diff_check([&](const Tensor& x) { return p(add(x, b)); }, a, eps));
    check("mul", kOpTolerance,
          finite_diff_check([&](const Tensor& x) { return p(mul(x, b)); }, a, eps));
    check("mul_scalar", kOpTolerance,
          finite_diff_check([&](const Tensor& x) { return p(mul_scalar(x, -1.3f)); }, a, eps));
    Tensor bias = uniform_tensor({4}, rng, -1.0, 1.0);
    check("bias_add.db", kOpTolerance,
          finite_diff_check([&](const Tensor& x) { return p(bias_add(a, x)); }, bias, eps));
    check("sum_all", kOpTolerance,
          finite_diff_check([](const Tensor& x) { return sum_all(x); }, a, eps));
  }
  {
    Rng rng = root.split("structural");
    Tensor a = uniform_tensor({3, 4}, rng, -1.0, 1.0);
    Tensor b = uniform_tensor({3, 4}, rng, -1.0, 1.0);
    Probe p64({6, 4}, rng);
    check("concat.axis0", kOpTolerance,
          finite_diff_check([&](const Tensor& x) { return p64(concat({x, b}, 0)); }, a, eps));
    Probe p38({3, 8}, rng);
    check("concat.axis1", kOpTolerance,
          finite_diff_check([&](const Tensor& x) { return p38(concat({b, x}, 1)); }, a, eps));
    Probe p24({2, 4}, rng);
    check("slice.axis0", kOpTolerance,
          finite_diff_check([&](const Tensor& x) { return p24(slice(x, 0, 1, 2)); }, a, eps));
    Probe p32({3, 2}, rng);
    check("slice.axis1", kOpTolerance,
          finite_diff_check([&](const Tensor& x) { return p32(slice(x, 1, 1, 2)); }, a, eps));
    Probe p43({4, 3}, rng);
    check("transpose", kOpTolerance,
          finite_diff_check([&](const Tensor& x) { return p43(transpose(x)); }, a, eps));
  }
  {
    Rng rng = root.split("embedding");
    Tensor table = uniform_tensor({6, 3}, rng, -1.0, 1.0);
    const std::vector<int> ids = {4, 0, 4, 2};
    Probe p({4, 3}, rng);
    check("embedding_gather", kOpTolerance,
          finite_diff_check([&](const Tensor& x) { return p(embedding_gather(x, ids)); }, table,
                            eps));
  }
  {
    Rng rng = root.split("activations");
    Tensor pos = uniform_tensor({3, 4}, rng, 0.05, 1.0);
    Tensor mixed = uniform_tensor({3, 4}, rng, -1.0, 1.0);
    Probe p({3, 4}, rng);
    check("gelu", kOpTolerance,
          finite_diff_check([&](const Tensor& x) { return p(gelu(x)); }, pos, eps));
    check("sigmoid", kOpTolerance,
          finite_diff_check([&](const Tensor& x) { return p(sigmoid(x)); }, mixed, eps));
  }
  {
    Rng rng = root.split("softmax");
    Tensor x = uniform_tensor({3, 7}, rng, -1.0, 1.0);
    Probe p({3, 7}, rng);
    check("softmax_lastdim", kOpTolerance,
          finite_diff_check([&](const Tensor& t) { return p(softmax_lastdim(t)); }, x, eps, 1,
                            kFloor));
  }
  {
    Rng rng = root.split("layer_norm");
    Tensor x = layer_norm_input({2, 8}, rng);
    Tensor gamma = uniform_tensor({8}, rng, 0.8, 1.6);
    Tensor beta = uniform_tensor({8}, rng, -1.0, 1.0);
    Probe p({2, 8}, rng);
    check("layer_norm.dx", kOpTolerance,
          finite_diff_check([&](const Tensor& t) { return p(layer_norm(t, gamma, beta)); }, x, eps,
                            1, 1.0));
    check("layer_norm.dgamma", kOpTolerance,
          finite_diff_check([&](const Tensor& t) { return p(layer_norm(x, t, beta)); }, gamma, eps,
                            1, kFloor));
    check("layer_norm.dbeta", kOpTolerance,
          finite_diff_check([&](const Tensor& t) { return p(layer_norm(x, gamma, t)); }, beta, eps));
  }
  {
    Rng rng = root.split("cross_entropy");
    Tensor logits = uniform_tensor({4, 6}, rng, -1.0, 1.0);
    const std::vector<int> targets = {1, 5, 0, 3};
    const std::vector<uint8_t> mask = {1, 0, 1, 1};
    check("cross_entropy", kOpTolerance,
          finite_diff_check(
              [&](const Tensor& t) { return cross_entropy_from_logits(t, targets, mask); }, logits,
              eps));
  }
  {
    Rng rng = root.split("attention");
    Tensor q = uniform_tensor({5, 8}, rng, -1.0, 1.0);
    Tensor k = uniform_tensor({5, 8}, rng, -1.0, 1.0);
    Tensor v = uniform_tensor({5, 8}, rng, -1.0, 1.0);
    AttnMask causal{AttnMask::Kind::image_prefix_causal, 2};
    Probe p({5, 8}, rng);
    check("attention.dq", kOpTolerance,
          finite_diff_check([&](const Tensor& t) { return p(attention_heads(t, k, v, 2, causal)); },
                            q, eps, 1, kFloor));
    check("attention.dk", kOpTolerance,
          finite_diff_check([&](const Tensor& t) { return p(attention_heads(q, t, v, 2, causal)); },
                            k, eps, 1, kFloor));
    check("attention.dv", kOpTolerance,
          finite_diff_check([&](const Tensor& t) { return p(attention_heads(q, k, t, 2, causal)); },
                            v, eps, 1, kFloor));
  }

  // composed model on a 2-record toy batch
  {
    Rng rng = root.split("model");
    Vocabulary vocab = Vocabulary::build({"edema has improved", "pneumonia is stable"});
    ModelConfig cfg;
    cfg.hidden_dim = 16;
    cfg.num_heads = 2;
    cfg.feature_dim = 6;
    cfg.image_tokens_per_xray = 3;
    cfg.guidance_dim = 5;
    cfg.max_text_len = 8;
    cfg.ffn_multiplier = 2;
    cfg.vocab_size = vocab.size();
    ModelParameters m = ModelParameters::init(cfg, rng.next_u64());

    Tensor fb = uniform_tensor({3, 6}, rng, -1.0, 1.0);
    Tensor ff = uniform_tensor({3, 6}, rng, -1.0, 1.0);
    Tensor fb2 = uniform_tensor({3, 6}, rng, -1.0, 1.0);
    Tensor ff2 = uniform_tensor({3, 6}, rng, -1.0, 1.0);
    std::vector<float> p1(5), p2(5);
    for (auto& x : p1) x = static_cast<float>(rng.uniform());
    for (auto& x : p2) x = static_cast<float>(rng.uniform());
    const std::vector<int> t1 = text_token_ids("edema has improved", vocab, cfg.max_text_len);
    const std::vector<int> t2 = text_token_ids("pneumonia is stable", vocab, cfg.max_text_len);
    const GuidancePath soft{GuidancePath::Mode::soft, 0.5f};

    auto record_loss = [&](const Tensor& b, const Tensor& f, const std::vector<float>& p,
                           const std::vector<int>& text) {
      Tensor logits = forward_full(b, f, p, p, text, soft, m);
      const int t = static_cast<int>(text.size());
      return cross_entropy_from_logits(slice(logits, 0, 0, t - 1), {text.begin() + 1, text.end()},
                                       std::vector<uint8_t>(static_cast<size_t>(t) - 1, 1));
    };
    auto loss_fn = [&](const Tensor&) {
      return mul_scalar(add(record_loss(fb, ff, p1, t1), record_loss(fb2, ff2, p2, t2)), 0.5f);
    };

    double worst = 0.0;
    for (const char* name :
         {"word_embedding", "type_embedding", "guidance_projection.weight",
          "image_projection.weight", "egdcm.0.attn.wq", "egdcm.0.attn.wk", "egdcm.1.ffn.w1",
          "generator.0.attn.wv", "generator.1.attn.wo", "generator.2.ffn.w2",
          "generator.final_ln.gamma", "output_head.weight", "output_head.bias"}) {
      Tensor target;
      for (auto& [n, t] : m.named()) {
        if (n == name) target = t;
      }
      const int stride = target.numel() > 64 ? static_cast<int>(target.numel() / 17) : 1;
      worst = std::max(worst, finite_diff_check(loss_fn, target, eps, stride, kFloor));
    }
    check("model.composed", kModelTolerance, worst);
  }

  return results;
}

}  // namespace eie
