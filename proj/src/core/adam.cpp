#include "core/adam.hpp"

#include <cmath>

namespace eie {

void adam_step(std::vector<std::pair<std::string, Tensor>>& params, AdamState& state,
               const AdamConfig& cfg) {
  if (cfg.lr <= 0.0f) throw UsageError("adam_step: learning rate must be positive");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(static_cast<double>(cfg.beta1), static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(static_cast<double>(cfg.beta2), static_cast<double>(state.step));
  for (auto& [name, param] : params) {
    const size_t n = static_cast<size_t>(param.numel());
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) m.assign(n, 0.0f);
    if (v.empty()) v.assign(n, 0.0f);
    if (m.size() != n) {
      throw UsageError("adam_step: moment size mismatch for '" + name + "'");
    }
    auto grad = param.grad();
    if (!grad.empty() && grad.size() != n) {
      throw UsageError("adam_step: gradient shape mismatch for '" + name + "'");
    }
    auto w = param.mutable_data();
    for (size_t i = 0; i < n; ++i) {
      const float g = grad.empty() ? 0.0f : grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0f - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0f - cfg.beta2) * g * g;
      const float mhat = static_cast<float>(m[i] / bc1);
      const float vhat = static_cast<float>(v[i] / bc2);
      w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace eie
