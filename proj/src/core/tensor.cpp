#include "core/tensor.hpp"

#include <cmath>
#include <sstream>

namespace eie {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

static std::shared_ptr<detail::TensorImpl> make_impl(Shape shape, bool rg) {
  for (int d : shape) {
    if (d <= 0) throw UsageError("tensor dimensions must be positive, got " + shape_str(shape));
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->requires_grad = rg;
  impl->data.resize(static_cast<size_t>(shape_numel(shape)));
  impl->shape = std::move(shape);
  return impl;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return Tensor(make_impl(std::move(shape), requires_grad));
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  auto impl = make_impl(std::move(shape), requires_grad);
  for (auto& x : impl->data) x = value;
  return Tensor(std::move(impl));
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data, bool requires_grad) {
  if (static_cast<int64_t>(data.size()) != shape_numel(shape)) {
    throw UsageError("data length " + std::to_string(data.size()) + " does not match shape " +
                     shape_str(shape));
  }
  auto impl = make_impl(std::move(shape), requires_grad);
  impl->data = std::move(data);
  return Tensor(std::move(impl));
}

Tensor Tensor::randn(Shape shape, Rng& rng, float stddev, bool requires_grad) {
  auto impl = make_impl(std::move(shape), requires_grad);
  for (auto& x : impl->data) x = stddev * static_cast<float>(rng.normal());
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar_of(float value) { return full({1}, value); }

std::span<const float> Tensor::grad() const {
  static const std::vector<float> empty;
  return impl_->grad.empty() ? std::span<const float>(empty) : std::span<const float>(impl_->grad);
}

std::span<float> Tensor::grad_buffer() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0f);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0f);
}

float Tensor::scalar() const {
  if (numel() != 1) throw UsageError("scalar() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

double Tensor::scalar_hi() const {
  if (numel() != 1) throw UsageError("scalar_hi() on tensor of shape " + shape_str(shape()));
  return impl_->has_hi_scalar ? impl_->hi_scalar : static_cast<double>(impl_->data[0]);
}

float Tensor::at(std::initializer_list<int> idx) const {
  if (idx.size() != impl_->shape.size()) throw UsageError("at(): index rank mismatch");
  size_t off = 0;
  size_t i = 0;
  for (int v : idx) {
    off = off * static_cast<size_t>(impl_->shape[i]) + static_cast<size_t>(v);
    ++i;
  }
  return impl_->data[off];
}

bool Tensor::all_finite() const {
  for (float x : impl_->data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1) throw UsageError("backward() expects a scalar loss");
  Tensor seed = loss;
  seed.grad_buffer()[0] += 1.0f;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

TapeScope::TapeScope(Tape& tape) : prev_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = prev_; }

Tape* active_tape() { return g_active_tape; }

}  // namespace eie
