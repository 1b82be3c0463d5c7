#include "colt/tensor.hpp"

#include <sstream>
#include <utility>

#include "colt/error.hpp"

namespace colt {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const int64_t n = shape_numel(shape);
  Tensor t;
  t.s_ = std::make_shared<Storage>();
  t.s_->shape = std::move(shape);
  t.s_->data.assign(static_cast<size_t>(n), 0.0f);
  t.s_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (float& x : t.s_->data) x = value;
  return t;
}

Tensor Tensor::from_vector(Shape shape, std::vector<float> values, bool requires_grad) {
  const int64_t n = shape_numel(shape);
  if (n != static_cast<int64_t>(values.size())) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not fill shape " + shape_str(shape));
  }
  Tensor t;
  t.s_ = std::make_shared<Storage>();
  t.s_->shape = std::move(shape);
  t.s_->data = std::move(values);
  t.s_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(float value) { return from_vector({1}, {value}); }

std::span<float> Tensor::grad() {
  if (s_->grad.empty()) s_->grad.assign(s_->data.size(), 0.0f);
  return s_->grad;
}

std::span<const float> Tensor::grad() const {
  if (s_->grad.empty()) throw StateError("gradient absent for shape " + shape_str(s_->shape));
  return s_->grad;
}

void Tensor::zero_grad() {
  for (float& g : s_->grad) g = 0.0f;
}

void Tensor::clear_grad() { s_->grad.clear(); }

Tensor Tensor::clone() const {
  Tensor t;
  t.s_ = std::make_shared<Storage>();
  t.s_->shape = s_->shape;
  t.s_->data = s_->data;
  t.s_->requires_grad = s_->requires_grad;
  return t;
}

}  // namespace colt
