#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "core/adam.hpp"
#include "core/eiet.hpp"
#include "core/gradcheck.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "doctest.h"

using namespace eie;

namespace {

// Floor passed to finite_diff_check for ops whose Jacobians cross zero at
// data-dependent points; see the note on gradient_floor in gradcheck.hpp.
constexpr double kFloor = 0.5;

Tensor random_tensor(Shape shape, Rng& rng, bool rg = false) {
  Tensor t = Tensor::zeros(std::move(shape), rg);
  for (auto& x : t.mutable_data()) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

// Positive entries keep linear-op gradients bounded away from zero so the
// plain relative comparison is meaningful in float32.
Tensor positive_tensor(Shape shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& x : t.mutable_data()) x = static_cast<float>(rng.uniform(0.2, 1.0));
  return t;
}

// Weighted scalar reduction so the finite-difference probe exercises the full
// Jacobian. Weights are positive and bounded away from zero, which keeps the
// probed gradients clear of the float32 finite-difference noise floor.
struct Probe {
  Tensor w;
  explicit Probe(const Shape& shape, Rng& rng) {
    w = Tensor::zeros(shape);
    for (auto& x : w.mutable_data()) x = static_cast<float>(rng.uniform(0.5, 1.5));
  }
  Tensor operator()(const Tensor& y) const { return sum_all(mul(y, w)); }
};

}  // namespace

TEST_CASE("rng: deterministic, splittable, uniform range") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng root(7);
  Rng c1 = root.split("mask");
  Rng c2 = root.split("branch");
  CHECK(c1.key() != c2.key());
  CHECK(root.split("mask").key() == c1.key());
  Rng u(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  // counter-based: output i depends only on (key, i)
  Rng d(99);
  d.next_u64();
  Rng e(99);
  e.next_u64();
  CHECK(d.next_u64() == e.next_u64());
}

TEST_CASE("rng: next_below is within range and deterministic") {
  Rng r(5);
  for (int i = 0; i < 200; ++i) CHECK(r.next_below(7) < 7);
}

TEST_CASE("matmul: identity and dot product examples") {
  Tensor identity = Tensor::from_data({2, 2}, {1, 0, 0, 1});
  Tensor b = Tensor::from_data({2, 2}, {3, 4, 5, 6});
  Tensor out = matmul(identity, b);
  CHECK(out.at({0, 0}) == 3.0f);
  CHECK(out.at({0, 1}) == 4.0f);
  CHECK(out.at({1, 0}) == 5.0f);
  CHECK(out.at({1, 1}) == 6.0f);

  Tensor row = Tensor::from_data({1, 2}, {1, 2});
  Tensor col = Tensor::from_data({2, 1}, {3, 4});
  CHECK(matmul(row, col).scalar() == 11.0f);
}

TEST_CASE("matmul: shape mismatch names both shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({4, 2});
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2x3]"), UsageError);
  try {
    matmul(a, b);
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("[4x2]") != std::string::npos);
  }
}

TEST_CASE("matmul: gradients match finite differences") {
  Rng rng(11);
  Tensor a = positive_tensor({4, 5}, rng);
  Tensor b = positive_tensor({5, 3}, rng);
  Probe probe({4, 3}, rng);
  CHECK(finite_diff_check([&](const Tensor& x) { return probe(matmul(x, b)); }, a, 1e-3) < 1e-3);
  CHECK(finite_diff_check([&](const Tensor& x) { return probe(matmul(a, x)); }, b, 1e-3) < 1e-3);
}

TEST_CASE("softmax: symmetry and overflow safety") {
  Tensor x = Tensor::from_data({4}, {0, 0, 0, 0});
  Tensor s = softmax_lastdim(x);
  for (int i = 0; i < 4; ++i) CHECK(s.data()[static_cast<size_t>(i)] == doctest::Approx(0.25));

  Tensor big = Tensor::from_data({2}, {1000, 1000});
  Tensor sb = softmax_lastdim(big);
  CHECK(sb.data()[0] == doctest::Approx(0.5));
  CHECK(sb.data()[1] == doctest::Approx(0.5));
  CHECK(sb.all_finite());
}

TEST_CASE("softmax: rows sum to one, outputs in (0,1), gradcheck") {
  Rng rng(13);
  Tensor x = random_tensor({3, 7}, rng);
  Tensor s = softmax_lastdim(x);
  for (int r = 0; r < 3; ++r) {
    double total = 0.0;
    for (int j = 0; j < 7; ++j) {
      const float v = s.at({r, j});
      CHECK(v > 0.0f);
      CHECK(v < 1.0f);
      total += v;
    }
    CHECK(std::fabs(total - 1.0) < 1e-5);
  }
  Probe probe({3, 7}, rng);
  CHECK(finite_diff_check([&](const Tensor& t) { return probe(softmax_lastdim(t)); }, x, 1e-3, 1,
                          kFloor) < 1e-3);
}

TEST_CASE("layer_norm: constant slice collapses to beta") {
  Tensor x = Tensor::from_data({1, 3}, {5, 5, 5});
  Tensor gamma = Tensor::full({3}, 1.0f);
  Tensor beta = Tensor::zeros({3});
  Tensor y = layer_norm(x, gamma, beta);
  for (int j = 0; j < 3; ++j) CHECK(y.at({0, j}) == doctest::Approx(0.0));

  Tensor gamma0 = Tensor::zeros({3});
  Tensor beta123 = Tensor::from_data({3}, {1, 2, 3});
  Rng rng(3);
  Tensor any = random_tensor({2, 3}, rng);
  Tensor z = layer_norm(any, gamma0, beta123);
  for (int r = 0; r < 2; ++r) {
    for (int j = 0; j < 3; ++j) CHECK(z.at({r, j}) == doctest::Approx(beta123.data()[static_cast<size_t>(j)]));
  }
}

TEST_CASE("layer_norm: gradcheck through x, gamma, beta") {
  Rng rng(17);
  // Random plus a per-row ramp keeps row variance healthy; tiny-variance rows
  // push the eps^2 truncation term of the finite difference through the roof.
  Tensor x = Tensor::zeros({2, 8});
  {
    auto v = x.mutable_data();
    for (size_t i = 0; i < v.size(); ++i) {
      const int j = static_cast<int>(i) % 8;
      v[i] = static_cast<float>(rng.uniform(-0.5, 0.5)) + (-0.5f + 1.0f * j / 7);
    }
  }
  Tensor gamma = Tensor::zeros({8});
  for (auto& g : gamma.mutable_data()) g = static_cast<float>(rng.uniform(0.8, 1.6));
  Tensor beta = random_tensor({8}, rng);
  Probe probe({2, 8}, rng);
  CHECK(finite_diff_check([&](const Tensor& t) { return probe(layer_norm(t, gamma, beta)); }, x,
                          1e-3, 1, 1.0) < 1e-3);
  CHECK(finite_diff_check([&](const Tensor& t) { return probe(layer_norm(x, t, beta)); }, gamma,
                          1e-3, 1, kFloor) < 1e-3);
  CHECK(finite_diff_check([&](const Tensor& t) { return probe(layer_norm(x, gamma, t)); }, beta,
                          1e-3) < 1e-3);
}

TEST_CASE("cross entropy: uniform logits give ln V") {
  Tensor logits = Tensor::zeros({1, 4});
  Tensor loss = cross_entropy_from_logits(logits, {2}, {1});
  CHECK(loss.scalar() == doctest::Approx(std::log(4.0)).epsilon(1e-6));
}

TEST_CASE("cross entropy: saturated target drives loss to zero") {
  Tensor logits = Tensor::from_data({1, 3}, {0, 50, 0});
  Tensor loss = cross_entropy_from_logits(logits, {1}, {1});
  CHECK(loss.scalar() < 1e-6);
}

TEST_CASE("cross entropy: matches direct formula oracle within 1e-6") {
  Rng rng(23);
  Tensor logits = random_tensor({5, 11}, rng);
  std::vector<int> targets(5);
  for (auto& t : targets) t = static_cast<int>(rng.next_below(11));
  std::vector<uint8_t> mask = {0, 1, 0, 0, 1};
  const float got = cross_entropy_from_logits(logits, targets, mask).scalar();

  double expected = 0.0;
  int n = 0;
  for (int i = 0; i < 5; ++i) {
    if (!mask[static_cast<size_t>(i)]) continue;
    double z = 0.0;
    for (int j = 0; j < 11; ++j) z += std::exp(static_cast<double>(logits.at({i, j})));
    expected += std::log(z) - logits.at({i, targets[static_cast<size_t>(i)]});
    ++n;
  }
  expected /= n;
  CHECK(std::fabs(got - expected) < 1e-6);
}

TEST_CASE("cross entropy: empty mask and bad target are usage errors") {
  Tensor logits = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(cross_entropy_from_logits(logits, {0, 1}, {0, 0}), UsageError);
  CHECK_THROWS_AS(cross_entropy_from_logits(logits, {0, 7}, {0, 1}), UsageError);
}

TEST_CASE("cross entropy: gradcheck") {
  Rng rng(29);
  Tensor logits = random_tensor({4, 6}, rng);
  std::vector<int> targets = {1, 5, 0, 3};
  std::vector<uint8_t> mask = {1, 0, 1, 1};
  CHECK(finite_diff_check(
            [&](const Tensor& t) { return cross_entropy_from_logits(t, targets, mask); }, logits,
            1e-3) < 1e-3);
}

TEST_CASE("elementwise and structural ops: gradcheck") {
  Rng rng(31);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = positive_tensor({3, 4}, rng);
  Tensor apos = positive_tensor({3, 4}, rng);
  Probe p34({3, 4}, rng);
  CHECK(finite_diff_check([&](const Tensor& t) { return p34(add(t, b)); }, a, 1e-3) < 1e-3);
  CHECK(finite_diff_check([&](const Tensor& t) { return p34(mul(t, b)); }, a, 1e-3) < 1e-3);
  CHECK(finite_diff_check([&](const Tensor& t) { return p34(mul(apos, t)); }, b, 1e-3) < 1e-3);
  CHECK(finite_diff_check([&](const Tensor& t) { return p34(mul_scalar(t, -1.7f)); }, a, 1e-3) < 1e-3);
  CHECK(finite_diff_check([&](const Tensor& t) { return p34(gelu(t)); }, apos, 1e-3) < 1e-3);
  CHECK(finite_diff_check([&](const Tensor& t) { return p34(sigmoid(t)); }, a, 1e-3) < 1e-3);

  Tensor bias = random_tensor({4}, rng);
  CHECK(finite_diff_check([&](const Tensor& t) { return p34(bias_add(a, t)); }, bias, 1e-3) < 1e-3);

  Tensor t43 = random_tensor({4, 3}, rng);
  Probe p43({4, 3}, rng);
  CHECK(finite_diff_check([&](const Tensor& t) { return p43(transpose(t)); }, a, 1e-3) < 1e-3);

  Probe p64({6, 4}, rng);
  CHECK(finite_diff_check([&](const Tensor& t) { return p64(concat({t, b}, 0)); }, a, 1e-3) < 1e-3);
  Probe p38({3, 8}, rng);
  CHECK(finite_diff_check([&](const Tensor& t) { return p38(concat({a, t}, 1)); }, b, 1e-3) < 1e-3);

  Probe p24({2, 4}, rng);
  CHECK(finite_diff_check([&](const Tensor& t) { return p24(slice(t, 0, 1, 2)); }, a, 1e-3) < 1e-3);
  Probe p32({3, 2}, rng);
  CHECK(finite_diff_check([&](const Tensor& t) { return p32(slice(t, 1, 1, 2)); }, a, 1e-3) < 1e-3);
  (void)t43;
}

TEST_CASE("gelu: negative branch matches the closed-form derivative") {
  // Finite differences cannot certify the region around gelu's stationary
  // point (x ~ -0.75), so compare against the derivative computed in double.
  const std::vector<float> points = {-3.0f, -1.5f, -0.75f, -0.3f, -0.05f};
  Tensor x = Tensor::from_data({static_cast<int>(points.size())}, points, true);
  Tape tape;
  {
    TapeScope scope(tape);
    tape.backward(sum_all(gelu(x)));
  }
  for (size_t i = 0; i < points.size(); ++i) {
    const double v = points[i];
    const double c = std::sqrt(2.0 / 3.14159265358979323846);
    const double u = c * (v + 0.044715 * v * v * v);
    const double t = std::tanh(u);
    const double expect = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * c * (1.0 + 3.0 * 0.044715 * v * v);
    CHECK(x.grad()[i] == doctest::Approx(expect).epsilon(1e-5));
  }
}

TEST_CASE("embedding gather: rows and gradients") {
  Rng rng(37);
  Tensor table = random_tensor({6, 3}, rng);
  std::vector<int> ids = {4, 0, 4};
  Tensor out = embedding_gather(table, ids);
  CHECK(out.at({0, 1}) == table.at({4, 1}));
  CHECK(out.at({1, 2}) == table.at({0, 2}));
  Probe p({3, 3}, rng);
  CHECK(finite_diff_check([&](const Tensor& t) { return p(embedding_gather(t, ids)); }, table, 1e-3) < 1e-3);
  CHECK_THROWS_AS(embedding_gather(table, {9}), UsageError);
}

TEST_CASE("attention: full and prefix masks, gradcheck") {
  Rng rng(41);
  Tensor q = random_tensor({5, 8}, rng);
  Tensor k = random_tensor({5, 8}, rng);
  Tensor v = random_tensor({5, 8}, rng);
  AttnMask causal{AttnMask::Kind::image_prefix_causal, 2};
  Probe p({5, 8}, rng);
  CHECK(finite_diff_check([&](const Tensor& t) { return p(attention_heads(t, k, v, 2, causal)); },
                          q, 1e-3, 1, kFloor) < 1e-3);
  CHECK(finite_diff_check([&](const Tensor& t) { return p(attention_heads(q, t, v, 2, causal)); },
                          k, 1e-3, 1, kFloor) < 1e-3);
  CHECK(finite_diff_check([&](const Tensor& t) { return p(attention_heads(q, k, t, 2, causal)); },
                          v, 1e-3, 1, kFloor) < 1e-3);
  AttnMask full{};
  CHECK(finite_diff_check([&](const Tensor& t) { return p(attention_heads(t, k, v, 4, full)); }, q,
                          1e-3, 1, kFloor) < 1e-3);
}

TEST_CASE("attention: rows the mask hides are never read") {
  Rng rng(43);
  Tensor q = random_tensor({4, 4}, rng);
  Tensor k = random_tensor({4, 4}, rng);
  Tensor v = random_tensor({4, 4}, rng);
  AttnMask causal{AttnMask::Kind::image_prefix_causal, 1};
  Tensor base = attention_heads(q, k, v, 2, causal);
  // perturb the last row of k and v; rows 0..2 must be bit-identical
  Tensor k2 = Tensor::from_data(k.shape(), {k.data().begin(), k.data().end()});
  Tensor v2 = Tensor::from_data(v.shape(), {v.data().begin(), v.data().end()});
  for (int j = 0; j < 4; ++j) {
    k2.mutable_data()[static_cast<size_t>(3 * 4 + j)] += 100.0f;
    v2.mutable_data()[static_cast<size_t>(3 * 4 + j)] -= 50.0f;
  }
  Tensor pert = attention_heads(q, k2, v2, 2, causal);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) CHECK(base.at({i, j}) == pert.at({i, j}));
  }
}

TEST_CASE("fan-out accumulates gradients exactly") {
  Rng rng(47);
  Tensor x = random_tensor({5}, rng, true);

  // grad of f alone
  {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(sum_all(x));
  }
  std::vector<float> gf(x.grad().begin(), x.grad().end());
  x.zero_grad();
  // grad of g alone
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor m = mul(x, x);
    tape.backward(sum_all(m));
  }
  std::vector<float> gg(x.grad().begin(), x.grad().end());
  x.zero_grad();
  // combined f(x) + g(x)
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor f = sum_all(x);
    Tensor m = mul(x, x);
    Tensor g = sum_all(m);
    tape.backward(add(f, g));
  }
  for (int i = 0; i < 5; ++i) {
    const size_t u = static_cast<size_t>(i);
    CHECK(x.grad()[u] == gg[u] + gf[u]);
  }
}

TEST_CASE("forward+backward is bit-deterministic") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    Tensor a = random_tensor({6, 6}, rng, true);
    Tensor b = random_tensor({6, 6}, rng, true);
    Tape tape;
    TapeScope scope(tape);
    Tensor s = softmax_lastdim(matmul(a, b));
    Tensor loss = cross_entropy_from_logits(matmul(s, b), {1, 2, 3, 4, 5, 0},
                                            {1, 1, 1, 1, 1, 1});
    tape.backward(loss);
    std::vector<float> out(a.grad().begin(), a.grad().end());
    out.push_back(loss.scalar());
    return out;
  };
  CHECK(run(123) == run(123));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Tensor w = Tensor::from_data({3}, {1, 2, 3}, true);
  std::vector<std::pair<std::string, Tensor>> params = {{"w", w}};
  AdamState state;
  adam_step(params, state, {});
  CHECK(state.step == 1);
  CHECK(w.data()[0] == 1.0f);
  CHECK(w.data()[1] == 2.0f);
  CHECK(w.data()[2] == 3.0f);
}

TEST_CASE("adam: first-step hand computation") {
  // w=1, g=1, lr=0.1: bias-corrected first step moves by about lr
  Tensor w = Tensor::from_data({1}, {1.0f}, true);
  w.grad_buffer()[0] = 1.0f;
  std::vector<std::pair<std::string, Tensor>> params = {{"w", w}};
  AdamState state;
  AdamConfig cfg;
  cfg.lr = 0.1f;
  adam_step(params, state, cfg);
  CHECK(w.data()[0] == doctest::Approx(0.9).epsilon(1e-5));
}

TEST_CASE("adam: converges on a quadratic") {
  Tensor w = Tensor::from_data({1}, {3.0f}, true);
  std::vector<std::pair<std::string, Tensor>> params = {{"w", w}};
  AdamState state;
  AdamConfig cfg;
  cfg.lr = 0.05f;
  for (int i = 0; i < 1000; ++i) {
    w.zero_grad();
    w.grad_buffer()[0] = 2.0f * w.data()[0];
    adam_step(params, state, cfg);
  }
  CHECK(std::fabs(w.data()[0]) < 0.05f);
}

TEST_CASE("finite_diff_check: linear function is near-exact") {
  Rng rng(53);
  Tensor x = random_tensor({7}, rng);
  CHECK(finite_diff_check([](const Tensor& t) { return sum_all(t); }, x, 1e-3) < 1e-6);
}

TEST_CASE("finite_diff_check: softmax + cross entropy composite") {
  Rng rng(59);
  Tensor x = random_tensor({3, 5}, rng);
  auto f = [](const Tensor& t) {
    Tensor s = softmax_lastdim(t);
    return cross_entropy_from_logits(mul_scalar(s, 4.0f), {1, 2, 0}, {1, 1, 1});
  };
  CHECK(finite_diff_check(f, x, 1e-3) < 1e-3);
}

TEST_CASE("eiet: round trip preserves bits") {
  Rng rng(61);
  Tensor t = random_tensor({3, 4, 2}, rng);
  const auto path = std::filesystem::temp_directory_path() / "eie_test_roundtrip.eiet";
  save_eiet(path, t);
  Tensor back = load_eiet(path);
  CHECK(back.shape() == t.shape());
  for (int64_t i = 0; i < t.numel(); ++i) {
    CHECK(back.data()[static_cast<size_t>(i)] == t.data()[static_cast<size_t>(i)]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("eiet: rejects bad magic and truncation") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto bad = dir / "eie_test_bad.eiet";
  {
    std::ofstream f(bad, std::ios::binary);
    f << "NOPE1234";
  }
  CHECK_THROWS_AS(load_eiet(bad), DataError);
  const auto trunc = dir / "eie_test_trunc.eiet";
  {
    Tensor t = Tensor::full({4}, 1.0f);
    save_eiet(trunc, t);
    std::filesystem::resize_file(trunc, 12);
  }
  CHECK_THROWS_AS(load_eiet(trunc), DataError);
  CHECK_THROWS_AS(load_eiet(dir / "eie_test_missing.eiet"), IoError);
  std::filesystem::remove(bad);
  std::filesystem::remove(trunc);
}

TEST_CASE("independent tapes may run on separate threads") {
  auto work = [](uint64_t seed, float* out) {
    Rng rng(seed);
    Tensor a = random_tensor({8, 8}, rng, true);
    Tensor b = random_tensor({8, 8}, rng, true);
    for (int i = 0; i < 20; ++i) {
      a.zero_grad();
      Tape tape;
      TapeScope scope(tape);
      Tensor loss = sum_all(mul(matmul(a, b), matmul(a, b)));
      tape.backward(loss);
      *out = loss.scalar();
    }
  };
  float r1 = 0, r2 = 0, r1s = 0, r2s = 0;
  std::thread t1(work, 1, &r1), t2(work, 2, &r2);
  t1.join();
  t2.join();
  work(1, &r1s);
  work(2, &r2s);
  CHECK(r1 == r1s);
  CHECK(r2 == r2s);
}
