#include "core/kernels.hpp"

namespace eie {

namespace {
// Rows per block: each loaded B row is reused across the block, which cuts
// memory traffic roughly IB-fold without touching per-element order.
constexpr int kRowBlock = 4;
}  // namespace

void matmul_nn(const float* a, const float* b, float* c, int m, int k, int n) {
  const int blocks = (m + kRowBlock - 1) / kRowBlock;
#pragma omp parallel for schedule(static)
  for (int ib = 0; ib < blocks; ++ib) {
    const int i0 = ib * kRowBlock;
    const int i1 = (i0 + kRowBlock < m) ? i0 + kRowBlock : m;
    for (int i = i0; i < i1; ++i) {
      float* ci = c + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] = 0.0f;
    }
    for (int kk = 0; kk < k; ++kk) {
      const float* bk = b + static_cast<size_t>(kk) * n;
      for (int i = i0; i < i1; ++i) {
        const float aik = a[static_cast<size_t>(i) * k + kk];
        float* ci = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
      }
    }
  }
}

void matmul_nt(const float* a, const float* b, float* c, int m, int n, int k) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const float* ai = a + static_cast<size_t>(i) * n;
    float* ci = c + static_cast<size_t>(i) * k;
    for (int j = 0; j < k; ++j) {
      const float* bj = b + static_cast<size_t>(j) * n;
      float acc = 0.0f;
      for (int t = 0; t < n; ++t) acc += ai[t] * bj[t];
      ci[j] = acc;
    }
  }
}

void matmul_tn_acc(const float* a, const float* b, float* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < k; ++i) {
    float* ci = c + static_cast<size_t>(i) * n;
    for (int r = 0; r < m; ++r) {
      const float ari = a[static_cast<size_t>(r) * k + i];
      const float* br = b + static_cast<size_t>(r) * n;
      for (int j = 0; j < n; ++j) ci[j] += ari * br[j];
    }
  }
}

void axpy(const float* x, float* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += x[i];
}

}  // namespace eie
