#pragma once

#include <cstddef>

namespace eie {

// Matrix kernels, row-major. Each output element is reduced in an order that
// depends only on the reduction length, and each output row reads only its
// own input row plus the weight matrix. A forward pass over a prefix of the
// rows is therefore bit-identical to the same rows inside a longer sequence;
// decoding and teacher-forcing re-scoring rely on this. Parallelism is across
// output rows (static schedule), which never changes per-element order.

// C[m x n] = A[m x k] * B[k x n]
void matmul_nn(const float* a, const float* b, float* c, int m, int k, int n);

// C[m x k] = A[m x n] * B[k x n]^T        (dot products of contiguous rows)
void matmul_nt(const float* a, const float* b, float* c, int m, int n, int k);

// C[k x n] = A[m x k]^T * B[m x n], accumulated into c (c += ...)
void matmul_tn_acc(const float* a, const float* b, float* c, int m, int k, int n);

// y += x, n elements
void axpy(const float* x, float* y, size_t n);

}  // namespace eie
