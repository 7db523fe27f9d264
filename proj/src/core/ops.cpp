#include "core/ops.hpp"

#include <cmath>
#include <cstring>

#include "core/kernels.hpp"

namespace eie {

namespace {

using detail::TensorImpl;
using ImplPtr = std::shared_ptr<TensorImpl>;

bool want_grad(std::initializer_list<const Tensor*> inputs) {
  if (!active_tape()) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

float* ensure_grad(const ImplPtr& impl) {
  if (impl->grad.empty()) impl->grad.assign(impl->data.size(), 0.0f);
  return impl->grad.data();
}

// Output gradient, or null when nothing flowed into this node.
const float* out_grad(const ImplPtr& impl) {
  return impl->grad.empty() ? nullptr : impl->grad.data();
}

void check_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw UsageError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(t.shape()));
}

int last_dim(const Tensor& t) { return t.shape().back(); }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_rank2(a, "matmul");
  check_rank2(b, "matmul");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw UsageError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " * " +
                     shape_str(b.shape()));
  }
  Tensor out = Tensor::zeros({m, n});
  matmul_nn(a.data().data(), b.data().data(), out.mutable_data().data(), m, k, n);
  if (want_grad({&a, &b})) {
    out.set_requires_grad(true);
    ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
    active_tape()->record([ai, bi, oi, m, k, n] {
      const float* g = out_grad(oi);
      if (!g) return;
      if (ai->requires_grad) {
        // dA = G * B^T
        std::vector<float> tmp(static_cast<size_t>(m) * k);
        matmul_nt(g, bi->data.data(), tmp.data(), m, n, k);
        axpy(tmp.data(), ensure_grad(ai), tmp.size());
      }
      if (bi->requires_grad) {
        // dB += A^T * G
        matmul_tn_acc(ai->data.data(), g, ensure_grad(bi), m, k, n);
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw UsageError("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor out = Tensor::zeros(a.shape());
  const auto av = a.data(), bv = b.data();
  auto ov = out.mutable_data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  if (a.numel() == 1 && (a.impl()->has_hi_scalar || b.impl()->has_hi_scalar)) {
    out.impl()->hi_scalar = a.scalar_hi() + b.scalar_hi();
    out.impl()->has_hi_scalar = true;
  }
  if (want_grad({&a, &b})) {
    out.set_requires_grad(true);
    ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
    active_tape()->record([ai, bi, oi] {
      const float* g = out_grad(oi);
      if (!g) return;
      if (ai->requires_grad) axpy(g, ensure_grad(ai), ai->data.size());
      if (bi->requires_grad) axpy(g, ensure_grad(bi), bi->data.size());
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw UsageError("mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor out = Tensor::zeros(a.shape());
  const auto av = a.data(), bv = b.data();
  auto ov = out.mutable_data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  if (want_grad({&a, &b})) {
    out.set_requires_grad(true);
    ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
    active_tape()->record([ai, bi, oi] {
      const float* g = out_grad(oi);
      if (!g) return;
      if (ai->requires_grad) {
        float* ga = ensure_grad(ai);
        for (size_t i = 0; i < ai->data.size(); ++i) ga[i] += g[i] * bi->data[i];
      }
      if (bi->requires_grad) {
        float* gb = ensure_grad(bi);
        for (size_t i = 0; i < bi->data.size(); ++i) gb[i] += g[i] * ai->data[i];
      }
    });
  }
  return out;
}

Tensor mul_scalar(const Tensor& a, float s) {
  Tensor out = Tensor::zeros(a.shape());
  const auto av = a.data();
  auto ov = out.mutable_data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * s;
  if (a.numel() == 1 && a.impl()->has_hi_scalar) {
    out.impl()->hi_scalar = a.scalar_hi() * s;
    out.impl()->has_hi_scalar = true;
  }
  if (want_grad({&a})) {
    out.set_requires_grad(true);
    ImplPtr ai = a.impl(), oi = out.impl();
    active_tape()->record([ai, oi, s] {
      const float* g = out_grad(oi);
      if (!g) return;
      float* ga = ensure_grad(ai);
      for (size_t i = 0; i < ai->data.size(); ++i) ga[i] += g[i] * s;
    });
  }
  return out;
}

Tensor bias_add(const Tensor& x, const Tensor& b) {
  check_rank2(x, "bias_add");
  const int m = x.dim(0), n = x.dim(1);
  if (b.numel() != n) {
    throw UsageError("bias_add: bias " + shape_str(b.shape()) + " does not match row width " +
                     std::to_string(n));
  }
  Tensor out = Tensor::zeros(x.shape());
  const float* xv = x.data().data();
  const float* bv = b.data().data();
  float* ov = out.mutable_data().data();
  for (int i = 0; i < m; ++i) {
    const float* xr = xv + static_cast<size_t>(i) * n;
    float* orow = ov + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) orow[j] = xr[j] + bv[j];
  }
  if (want_grad({&x, &b})) {
    out.set_requires_grad(true);
    ImplPtr xi = x.impl(), bi = b.impl(), oi = out.impl();
    active_tape()->record([xi, bi, oi, m, n] {
      const float* g = out_grad(oi);
      if (!g) return;
      if (xi->requires_grad) axpy(g, ensure_grad(xi), xi->data.size());
      if (bi->requires_grad) {
        float* gb = ensure_grad(bi);
        for (int i = 0; i < m; ++i) {
          const float* gr = g + static_cast<size_t>(i) * n;
          for (int j = 0; j < n; ++j) gb[j] += gr[j];
        }
      }
    });
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw UsageError("concat: no parts");
  if (axis != 0 && axis != 1) throw UsageError("concat: axis must be 0 or 1");
  for (const Tensor& p : parts) check_rank2(p, "concat");
  const int fixed = parts[0].dim(1 - axis);
  int total = 0;
  for (const Tensor& p : parts) {
    if (p.dim(1 - axis) != fixed) {
      throw UsageError("concat: part " + shape_str(p.shape()) + " disagrees on non-concat axis");
    }
    total += p.dim(axis);
  }
  Shape out_shape = axis == 0 ? Shape{total, fixed} : Shape{fixed, total};
  Tensor out = Tensor::zeros(out_shape);
  float* ov = out.mutable_data().data();
  if (axis == 0) {
    size_t off = 0;
    for (const Tensor& p : parts) {
      std::memcpy(ov + off, p.data().data(), p.data().size() * sizeof(float));
      off += p.data().size();
    }
  } else {
    int col = 0;
    for (const Tensor& p : parts) {
      const int pc = p.dim(1);
      for (int i = 0; i < fixed; ++i) {
        std::memcpy(ov + static_cast<size_t>(i) * total + col,
                    p.data().data() + static_cast<size_t>(i) * pc, static_cast<size_t>(pc) * sizeof(float));
      }
      col += pc;
    }
  }
  bool rg = false;
  for (const Tensor& p : parts) rg = rg || p.requires_grad();
  if (active_tape() && rg) {
    out.set_requires_grad(true);
    std::vector<ImplPtr> impls;
    impls.reserve(parts.size());
    for (const Tensor& p : parts) impls.push_back(p.impl());
    ImplPtr oi = out.impl();
    active_tape()->record([impls, oi, axis, fixed, total] {
      const float* g = out_grad(oi);
      if (!g) return;
      if (axis == 0) {
        size_t off = 0;
        for (const ImplPtr& pi : impls) {
          if (pi->requires_grad) axpy(g + off, ensure_grad(pi), pi->data.size());
          off += pi->data.size();
        }
      } else {
        int col = 0;
        for (const ImplPtr& pi : impls) {
          const int pc = pi->shape[1];
          if (pi->requires_grad) {
            float* gp = ensure_grad(pi);
            for (int i = 0; i < fixed; ++i) {
              const float* gr = g + static_cast<size_t>(i) * total + col;
              float* pr = gp + static_cast<size_t>(i) * pc;
              for (int j = 0; j < pc; ++j) pr[j] += gr[j];
            }
          }
          col += pc;
        }
      }
    });
  }
  return out;
}

Tensor slice(const Tensor& x, int axis, int start, int len) {
  check_rank2(x, "slice");
  if (axis != 0 && axis != 1) throw UsageError("slice: axis must be 0 or 1");
  if (start < 0 || len <= 0 || start + len > x.dim(axis)) {
    throw UsageError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + len) +
                     ") out of bounds for " + shape_str(x.shape()));
  }
  const int rows = x.dim(0), cols = x.dim(1);
  Shape out_shape = axis == 0 ? Shape{len, cols} : Shape{rows, len};
  Tensor out = Tensor::zeros(out_shape);
  float* ov = out.mutable_data().data();
  const float* xv = x.data().data();
  if (axis == 0) {
    std::memcpy(ov, xv + static_cast<size_t>(start) * cols, static_cast<size_t>(len) * cols * sizeof(float));
  } else {
    for (int i = 0; i < rows; ++i) {
      std::memcpy(ov + static_cast<size_t>(i) * len, xv + static_cast<size_t>(i) * cols + start,
                  static_cast<size_t>(len) * sizeof(float));
    }
  }
  if (want_grad({&x})) {
    out.set_requires_grad(true);
    ImplPtr xi = x.impl(), oi = out.impl();
    active_tape()->record([xi, oi, axis, start, len, rows, cols] {
      const float* g = out_grad(oi);
      if (!g) return;
      float* gx = ensure_grad(xi);
      if (axis == 0) {
        axpy(g, gx + static_cast<size_t>(start) * cols, static_cast<size_t>(len) * cols);
      } else {
        for (int i = 0; i < rows; ++i) {
          float* gr = gx + static_cast<size_t>(i) * cols + start;
          const float* gs = g + static_cast<size_t>(i) * len;
          for (int j = 0; j < len; ++j) gr[j] += gs[j];
        }
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& x) {
  check_rank2(x, "transpose");
  const int m = x.dim(0), n = x.dim(1);
  Tensor out = Tensor::zeros({n, m});
  const float* xv = x.data().data();
  float* ov = out.mutable_data().data();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) ov[static_cast<size_t>(j) * m + i] = xv[static_cast<size_t>(i) * n + j];
  }
  if (want_grad({&x})) {
    out.set_requires_grad(true);
    ImplPtr xi = x.impl(), oi = out.impl();
    active_tape()->record([xi, oi, m, n] {
      const float* g = out_grad(oi);
      if (!g) return;
      float* gx = ensure_grad(xi);
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < m; ++i) gx[static_cast<size_t>(i) * n + j] += g[static_cast<size_t>(j) * m + i];
      }
    });
  }
  return out;
}

Tensor embedding_gather(const Tensor& table, const std::vector<int>& ids) {
  check_rank2(table, "embedding_gather");
  const int v = table.dim(0), d = table.dim(1);
  const int t = static_cast<int>(ids.size());
  if (t == 0) throw UsageError("embedding_gather: empty id list");
  for (int id : ids) {
    if (id < 0 || id >= v) {
      throw UsageError("embedding_gather: id " + std::to_string(id) + " outside table of " +
                       std::to_string(v) + " rows");
    }
  }
  Tensor out = Tensor::zeros({t, d});
  float* ov = out.mutable_data().data();
  const float* tv = table.data().data();
  for (int i = 0; i < t; ++i) {
    std::memcpy(ov + static_cast<size_t>(i) * d, tv + static_cast<size_t>(ids[i]) * d,
                static_cast<size_t>(d) * sizeof(float));
  }
  if (want_grad({&table})) {
    out.set_requires_grad(true);
    ImplPtr ti = table.impl(), oi = out.impl();
    active_tape()->record([ti, oi, ids, d] {
      const float* g = out_grad(oi);
      if (!g) return;
      float* gt = ensure_grad(ti);
      for (size_t i = 0; i < ids.size(); ++i) {
        axpy(g + i * d, gt + static_cast<size_t>(ids[i]) * d, static_cast<size_t>(d));
      }
    });
  }
  return out;
}

Tensor softmax_lastdim(const Tensor& x) {
  const int n = last_dim(x);
  const int rows = static_cast<int>(x.numel() / n);
  if (n < 1) throw UsageError("softmax_lastdim: empty last dimension");
  Tensor out = Tensor::zeros(x.shape());
  const float* xv = x.data().data();
  float* ov = out.mutable_data().data();
  for (int r = 0; r < rows; ++r) {
    const float* xr = xv + static_cast<size_t>(r) * n;
    float* orow = ov + static_cast<size_t>(r) * n;
    float mx = xr[0];
    for (int j = 1; j < n; ++j) mx = xr[j] > mx ? xr[j] : mx;
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      orow[j] = std::exp(xr[j] - mx);
      z += orow[j];
    }
    const float inv = static_cast<float>(1.0 / z);
    for (int j = 0; j < n; ++j) orow[j] *= inv;
  }
  if (want_grad({&x})) {
    out.set_requires_grad(true);
    ImplPtr xi = x.impl(), oi = out.impl();
    active_tape()->record([xi, oi, rows, n] {
      const float* g = out_grad(oi);
      if (!g) return;
      float* gx = ensure_grad(xi);
      const float* s = oi->data.data();
      for (int r = 0; r < rows; ++r) {
        const float* sr = s + static_cast<size_t>(r) * n;
        const float* gr = g + static_cast<size_t>(r) * n;
        float* gxr = gx + static_cast<size_t>(r) * n;
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += static_cast<double>(gr[j]) * sr[j];
        for (int j = 0; j < n; ++j) gxr[j] += sr[j] * (gr[j] - static_cast<float>(dot));
      }
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  const int d = last_dim(x);
  if (gamma.numel() != d || beta.numel() != d) {
    throw UsageError("layer_norm: gamma/beta length must be " + std::to_string(d));
  }
  if (eps <= 0.0f) throw UsageError("layer_norm: eps must be positive");
  const int rows = static_cast<int>(x.numel() / d);
  Tensor out = Tensor::zeros(x.shape());
  // normalized values are kept for backward
  std::vector<float> xhat(static_cast<size_t>(x.numel()));
  std::vector<float> inv_sigma(static_cast<size_t>(rows));
  const float* xv = x.data().data();
  const float* gv = gamma.data().data();
  const float* bv = beta.data().data();
  float* ov = out.mutable_data().data();
  for (int r = 0; r < rows; ++r) {
    const float* xr = xv + static_cast<size_t>(r) * d;
    float* hr = xhat.data() + static_cast<size_t>(r) * d;
    float* orow = ov + static_cast<size_t>(r) * d;
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += xr[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = xr[j] - mean;
      var += c * c;
    }
    var /= d;
    const float is = static_cast<float>(1.0 / std::sqrt(var + eps));
    inv_sigma[static_cast<size_t>(r)] = is;
    for (int j = 0; j < d; ++j) {
      hr[j] = (xr[j] - static_cast<float>(mean)) * is;
      orow[j] = gv[j] * hr[j] + bv[j];
    }
  }
  if (want_grad({&x, &gamma, &beta})) {
    out.set_requires_grad(true);
    ImplPtr xi = x.impl(), gi = gamma.impl(), bi = beta.impl(), oi = out.impl();
    auto xh = std::make_shared<std::vector<float>>(std::move(xhat));
    auto is = std::make_shared<std::vector<float>>(std::move(inv_sigma));
    active_tape()->record([xi, gi, bi, oi, xh, is, rows, d] {
      const float* g = out_grad(oi);
      if (!g) return;
      const float* gv = gi->data.data();
      if (bi->requires_grad) {
        float* gb = ensure_grad(bi);
        for (int r = 0; r < rows; ++r) {
          const float* gr = g + static_cast<size_t>(r) * d;
          for (int j = 0; j < d; ++j) gb[j] += gr[j];
        }
      }
      if (gi->requires_grad) {
        float* gg = ensure_grad(gi);
        for (int r = 0; r < rows; ++r) {
          const float* gr = g + static_cast<size_t>(r) * d;
          const float* hr = xh->data() + static_cast<size_t>(r) * d;
          for (int j = 0; j < d; ++j) gg[j] += gr[j] * hr[j];
        }
      }
      if (xi->requires_grad) {
        float* gx = ensure_grad(xi);
        for (int r = 0; r < rows; ++r) {
          const float* gr = g + static_cast<size_t>(r) * d;
          const float* hr = xh->data() + static_cast<size_t>(r) * d;
          float* gxr = gx + static_cast<size_t>(r) * d;
          double sum_dh = 0.0, sum_dh_h = 0.0;
          for (int j = 0; j < d; ++j) {
            const double dh = static_cast<double>(gr[j]) * gv[j];
            sum_dh += dh;
            sum_dh_h += dh * hr[j];
          }
          const float mean_dh = static_cast<float>(sum_dh / d);
          const float mean_dh_h = static_cast<float>(sum_dh_h / d);
          const float s = (*is)[static_cast<size_t>(r)];
          for (int j = 0; j < d; ++j) {
            const float dh = gr[j] * gv[j];
            gxr[j] += s * (dh - mean_dh - hr[j] * mean_dh_h);
          }
        }
      }
    });
  }
  return out;
}

Tensor gelu(const Tensor& x) {
  constexpr float kC = 0.7978845608028654f;  // sqrt(2/pi)
  constexpr float kA = 0.044715f;
  Tensor out = Tensor::zeros(x.shape());
  const auto xv = x.data();
  auto ov = out.mutable_data();
  for (size_t i = 0; i < ov.size(); ++i) {
    const float v = xv[i];
    const float t = std::tanh(kC * (v + kA * v * v * v));
    ov[i] = 0.5f * v * (1.0f + t);
  }
  if (want_grad({&x})) {
    out.set_requires_grad(true);
    ImplPtr xi = x.impl(), oi = out.impl();
    active_tape()->record([xi, oi] {
      const float* g = out_grad(oi);
      if (!g) return;
      float* gx = ensure_grad(xi);
      for (size_t i = 0; i < xi->data.size(); ++i) {
        const float v = xi->data[i];
        const float u = kC * (v + kA * v * v * v);
        const float t = std::tanh(u);
        const float du = kC * (1.0f + 3.0f * kA * v * v);
        const float d = 0.5f * (1.0f + t) + 0.5f * v * (1.0f - t * t) * du;
        gx[i] += g[i] * d;
      }
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const auto xv = x.data();
  auto ov = out.mutable_data();
  for (size_t i = 0; i < ov.size(); ++i) {
    const float v = xv[i];
    ov[i] = v >= 0.0f ? 1.0f / (1.0f + std::exp(-v)) : std::exp(v) / (1.0f + std::exp(v));
  }
  if (want_grad({&x})) {
    out.set_requires_grad(true);
    ImplPtr xi = x.impl(), oi = out.impl();
    active_tape()->record([xi, oi] {
      const float* g = out_grad(oi);
      if (!g) return;
      float* gx = ensure_grad(xi);
      const float* s = oi->data.data();
      for (size_t i = 0; i < xi->data.size(); ++i) gx[i] += g[i] * s[i] * (1.0f - s[i]);
    });
  }
  return out;
}

Tensor sum_all(const Tensor& x) {
  Tensor out = Tensor::zeros({1});
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  out.mutable_data()[0] = static_cast<float>(acc);
  out.impl()->hi_scalar = acc;
  out.impl()->has_hi_scalar = true;
  if (want_grad({&x})) {
    out.set_requires_grad(true);
    ImplPtr xi = x.impl(), oi = out.impl();
    active_tape()->record([xi, oi] {
      const float* g = out_grad(oi);
      if (!g) return;
      float* gx = ensure_grad(xi);
      for (size_t i = 0; i < xi->data.size(); ++i) gx[i] += g[0];
    });
  }
  return out;
}

Tensor cross_entropy_from_logits(const Tensor& logits, const std::vector<int>& targets,
                                 const std::vector<uint8_t>& mask) {
  check_rank2(logits, "cross_entropy_from_logits");
  const int t = logits.dim(0), v = logits.dim(1);
  if (static_cast<int>(targets.size()) != t || static_cast<int>(mask.size()) != t) {
    throw UsageError("cross_entropy_from_logits: targets/mask length must equal " + std::to_string(t));
  }
  int n_masked = 0;
  for (int i = 0; i < t; ++i) {
    if (!mask[static_cast<size_t>(i)]) continue;
    ++n_masked;
    if (targets[static_cast<size_t>(i)] < 0 || targets[static_cast<size_t>(i)] >= v) {
      throw UsageError("cross_entropy_from_logits: masked target " +
                       std::to_string(targets[static_cast<size_t>(i)]) + " outside vocab " + std::to_string(v));
    }
  }
  if (n_masked == 0) throw UsageError("cross_entropy_from_logits: empty mask, loss undefined");
  Tensor out = Tensor::zeros({1});
  const float* lv = logits.data().data();
  double total = 0.0;
  for (int i = 0; i < t; ++i) {
    if (!mask[static_cast<size_t>(i)]) continue;
    const float* row = lv + static_cast<size_t>(i) * v;
    float mx = row[0];
    for (int j = 1; j < v; ++j) mx = row[j] > mx ? row[j] : mx;
    double z = 0.0;
    for (int j = 0; j < v; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
    total += (std::log(z) + mx) - row[targets[static_cast<size_t>(i)]];
  }
  const float loss = static_cast<float>(total / n_masked);
  if (!std::isfinite(loss)) throw NumericError("cross_entropy_from_logits: non-finite loss");
  out.mutable_data()[0] = loss;
  out.impl()->hi_scalar = total / n_masked;
  out.impl()->has_hi_scalar = true;
  if (want_grad({&logits})) {
    out.set_requires_grad(true);
    ImplPtr li = logits.impl(), oi = out.impl();
    active_tape()->record([li, oi, targets, mask, t, v, n_masked] {
      const float* g = out_grad(oi);
      if (!g) return;
      float* gl = ensure_grad(li);
      const float scale = g[0] / static_cast<float>(n_masked);
      const float* lv = li->data.data();
      for (int i = 0; i < t; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        const float* row = lv + static_cast<size_t>(i) * v;
        float* grow = gl + static_cast<size_t>(i) * v;
        float mx = row[0];
        for (int j = 1; j < v; ++j) mx = row[j] > mx ? row[j] : mx;
        double z = 0.0;
        for (int j = 0; j < v; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
        for (int j = 0; j < v; ++j) {
          const float p = static_cast<float>(std::exp(static_cast<double>(row[j]) - mx) / z);
          grow[j] += scale * (p - (j == targets[static_cast<size_t>(i)] ? 1.0f : 0.0f));
        }
      }
    });
  }
  return out;
}

Tensor attention_heads(const Tensor& q, const Tensor& k, const Tensor& v, int num_heads,
                       const AttnMask& mask) {
  check_rank2(q, "attention_heads");
  const int s = q.dim(0), d = q.dim(1);
  if (k.shape() != q.shape() || v.shape() != q.shape()) {
    throw UsageError("attention_heads: q/k/v shapes must match, got " + shape_str(q.shape()) + ", " +
                     shape_str(k.shape()) + ", " + shape_str(v.shape()));
  }
  if (num_heads < 1 || d % num_heads != 0) {
    throw UsageError("attention_heads: width " + std::to_string(d) + " not divisible by " +
                     std::to_string(num_heads) + " heads");
  }
  const int hd = d / num_heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(hd));
  Tensor out = Tensor::zeros({s, d});
  // Row-major [head][query][key] attention weights; disallowed keys stay 0.
  auto weights = std::make_shared<std::vector<float>>(
      static_cast<size_t>(num_heads) * s * s, 0.0f);
  const float* qv = q.data().data();
  const float* kv = k.data().data();
  const float* vv = v.data().data();
  float* ov = out.mutable_data().data();
#pragma omp parallel for schedule(static)
  for (int h = 0; h < num_heads; ++h) {
    const int c0 = h * hd;
    float* wh = weights->data() + static_cast<size_t>(h) * s * s;
    std::vector<float> scores(static_cast<size_t>(s));
    for (int i = 0; i < s; ++i) {
      const int limit = mask.allowed_end(i, s);
      const float* qi = qv + static_cast<size_t>(i) * d + c0;
      for (int j = 0; j < limit; ++j) {
        const float* kj = kv + static_cast<size_t>(j) * d + c0;
        float acc = 0.0f;
        for (int t = 0; t < hd; ++t) acc += qi[t] * kj[t];
        scores[static_cast<size_t>(j)] = acc * scale;
      }
      float mx = scores[0];
      for (int j = 1; j < limit; ++j) mx = scores[static_cast<size_t>(j)] > mx ? scores[static_cast<size_t>(j)] : mx;
      double z = 0.0;
      float* wrow = wh + static_cast<size_t>(i) * s;
      for (int j = 0; j < limit; ++j) {
        wrow[j] = std::exp(scores[static_cast<size_t>(j)] - mx);
        z += wrow[j];
      }
      const float inv = static_cast<float>(1.0 / z);
      for (int j = 0; j < limit; ++j) wrow[j] *= inv;
      float* orow = ov + static_cast<size_t>(i) * d + c0;
      for (int t = 0; t < hd; ++t) {
        float acc = 0.0f;
        for (int j = 0; j < limit; ++j) acc += wrow[j] * vv[static_cast<size_t>(j) * d + c0 + t];
        orow[t] = acc;
      }
    }
  }
  if (want_grad({&q, &k, &v})) {
    out.set_requires_grad(true);
    ImplPtr qi = q.impl(), ki = k.impl(), vi = v.impl(), oi = out.impl();
    active_tape()->record([qi, ki, vi, oi, weights, mask, s, d, num_heads, hd, scale] {
      const float* g = out_grad(oi);
      if (!g) return;
      float* gq = qi->requires_grad ? ensure_grad(qi) : nullptr;
      float* gk = ki->requires_grad ? ensure_grad(ki) : nullptr;
      float* gv = vi->requires_grad ? ensure_grad(vi) : nullptr;
      const float* qv = qi->data.data();
      const float* kv = ki->data.data();
      const float* vv = vi->data.data();
#pragma omp parallel for schedule(static)
      for (int h = 0; h < num_heads; ++h) {
        const int c0 = h * hd;
        const float* wh = weights->data() + static_cast<size_t>(h) * s * s;
        std::vector<float> dw(static_cast<size_t>(s));
        for (int i = 0; i < s; ++i) {
          const int limit = mask.allowed_end(i, s);
          const float* wrow = wh + static_cast<size_t>(i) * s;
          const float* grow = g + static_cast<size_t>(i) * d + c0;
          // d(weights) and the softmax backward correction
          double dot = 0.0;
          for (int j = 0; j < limit; ++j) {
            const float* vj = vv + static_cast<size_t>(j) * d + c0;
            float acc = 0.0f;
            for (int t = 0; t < hd; ++t) acc += grow[t] * vj[t];
            dw[static_cast<size_t>(j)] = acc;
            dot += static_cast<double>(acc) * wrow[j];
          }
          const float* qrow = qv + static_cast<size_t>(i) * d + c0;
          for (int j = 0; j < limit; ++j) {
            const float ds = wrow[j] * (dw[static_cast<size_t>(j)] - static_cast<float>(dot)) * scale;
            if (gq) {
              const float* kj = kv + static_cast<size_t>(j) * d + c0;
              float* gqr = gq + static_cast<size_t>(i) * d + c0;
              for (int t = 0; t < hd; ++t) gqr[t] += ds * kj[t];
            }
            if (gk) {
              float* gkr = gk + static_cast<size_t>(j) * d + c0;
              for (int t = 0; t < hd; ++t) gkr[t] += ds * qrow[t];
            }
            if (gv) {
              float* gvr = gv + static_cast<size_t>(j) * d + c0;
              for (int t = 0; t < hd; ++t) gvr[t] += wrow[j] * grow[t];
            }
          }
        }
      }
    });
  }
  return out;
}

}  // namespace eie
