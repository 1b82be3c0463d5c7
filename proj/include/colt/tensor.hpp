#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace colt {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major float32 tensor with an optional same-shape gradient
/// buffer. A Tensor is a cheap handle; copies share the same storage, which
/// is what lets tape nodes and parameter sets refer to one buffer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from_vector(Shape shape, std::vector<float> values,
                            bool requires_grad = false);
  static Tensor scalar(float value);

  bool valid() const { return s_ != nullptr; }

  const Shape& shape() const { return s_->shape; }
  int64_t rank() const { return static_cast<int64_t>(s_->shape.size()); }
  int64_t dim(int64_t i) const { return s_->shape[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(s_->data.size()); }

  std::span<float> data() { return s_->data; }
  std::span<const float> data() const { return s_->data; }

  bool requires_grad() const { return s_->requires_grad; }
  void set_requires_grad(bool v) { s_->requires_grad = v; }

  bool has_grad() const { return !s_->grad.empty(); }
  std::span<float> grad();              // allocates zeros on first use
  std::span<const float> grad() const;  // throws StateError when absent
  void zero_grad();   // zeroes in place if allocated
  void clear_grad();  // drops the buffer entirely

  /// Deep copy (values only; grad not copied).
  Tensor clone() const;

  /// True when both handles point at the same storage.
  bool same_storage(const Tensor& other) const { return s_ == other.s_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<float> data;
    std::vector<float> grad;  // empty or same length as data
    bool requires_grad = false;
  };

  std::shared_ptr<Storage> s_;
};

}  // namespace colt
