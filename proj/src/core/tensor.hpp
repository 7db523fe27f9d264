#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace eie {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
int64_t shape_numel(const Shape& s);

namespace detail {
struct TensorImpl {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty until touched by a backward pass
  bool requires_grad = false;
  // Scalar-producing reductions keep their double-precision value here so
  // the finite-difference checker is not limited by the float32 cast.
  double hi_scalar = 0.0;
  bool has_hi_scalar = false;
};
}  // namespace detail

// Dense rank-N float32 tensor. Value semantics with shared storage: copying a
// Tensor aliases the same buffer. Tensors are treated as immutable once an op
// has consumed them; the exceptions are gradient buffers during backward and
// leaf parameters inside an optimizer step.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<float> data, bool requires_grad = false);
  static Tensor randn(Shape shape, Rng& rng, float stddev, bool requires_grad = false);
  static Tensor scalar_of(float value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(impl_->data.size()); }

  std::span<const float> data() const { return impl_->data; }
  // Mutation is reserved for leaf tensors (parameter init, optimizer steps,
  // test fixtures); ops never mutate their inputs.
  std::span<float> mutable_data() { return impl_->data; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool rg) { impl_->requires_grad = rg; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const float> grad() const;
  std::span<float> grad_buffer();  // allocates zeros on first use
  void zero_grad();

  float scalar() const;
  // The double-precision value of a scalar reduction when the producing op
  // recorded one; falls back to the stored float.
  double scalar_hi() const;
  float at(std::initializer_list<int> idx) const;

  // True when every element is finite.
  bool all_finite() const;

  std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;
};

// Record of one forward pass. Ops push their backward closures in execution
// order; backward() replays them in exact reverse order. Gradients accumulate
// by summation, so fan-out adds contributions. A tape and the tensors flowing
// through it belong to one thread; independent tapes may run concurrently.
class Tape {
 public:
  void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }
  size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must be a scalar.
  void backward(const Tensor& loss);

 private:
  std::vector<std::function<void()>> nodes_;
};

// RAII scope installing a thread-local active tape. Ops record only while a
// scope is live and some input requires gradients.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* prev_;
};

Tape* active_tape();

}  // namespace eie
