#pragma once

#include <cstdint>
#include <vector>

#include "core/tensor.hpp"

namespace eie {

// Attention visibility pattern over one concatenated sequence. Allowed key
// range for every query row is a contiguous prefix, which keeps the kernels
// simple and makes causality structural: masked-out positions are never read.
struct AttnMask {
  enum class Kind { full, image_prefix_causal };
  Kind kind = Kind::full;
  int image_prefix = 0;  // rows [0, image_prefix) form the image/guidance block

  int allowed_end(int row, int total) const {
    if (kind == Kind::full) return total;
    return row < image_prefix ? image_prefix : row + 1;
  }
};

// c = a * b for [m x k] * [k x n]
Tensor matmul(const Tensor& a, const Tensor& b);

// elementwise, identical shapes
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor mul_scalar(const Tensor& a, float s);

// x [m x n] plus a length-n row vector (rank 1 or [1 x n])
Tensor bias_add(const Tensor& x, const Tensor& b);

// rank-2 concat/split
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& x, int axis, int start, int len);
Tensor transpose(const Tensor& x);

// table [V x d], ids in [0, V) -> [ids.size() x d]
Tensor embedding_gather(const Tensor& table, const std::vector<int>& ids);

Tensor softmax_lastdim(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-5f);
Tensor gelu(const Tensor& x);     // tanh approximation
Tensor sigmoid(const Tensor& x);
Tensor sum_all(const Tensor& x);  // scalar

// Mean of -log softmax(logits_row)[target] over rows where mask is true.
// Masked targets must be < vocab; at least one mask entry must be true.
Tensor cross_entropy_from_logits(const Tensor& logits, const std::vector<int>& targets,
                                 const std::vector<uint8_t>& mask);

// Multi-head scaled dot-product attention over one packed sequence.
// q, k, v are [S x d] with d divisible by num_heads; returns the [S x d]
// context (pre output-projection). Disallowed positions get exact zero
// weight and are never read, so outputs at row i are bit-invariant to any
// change at rows the mask hides from i.
Tensor attention_heads(const Tensor& q, const Tensor& k, const Tensor& v, int num_heads,
                       const AttnMask& mask);

}  // namespace eie
