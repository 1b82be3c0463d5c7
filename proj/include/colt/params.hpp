#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colt/tensor.hpp"

namespace colt {

enum class ParamKind : uint8_t { conv = 0, linear = 1, bias = 2, norm = 3 };

const char* param_kind_name(ParamKind k);

/// Output-layer tensors are named "head.*"; they are the ones swapped out by
/// head replacement and are never prune-eligible.
bool is_head_param(const std::string& name);

struct ParamTensor {
  std::string name;
  ParamKind kind;
  Tensor value;                // requires_grad = true
  std::vector<float> initial;  // frozen snapshot taken at construction
};

/// Ordered, named collection of model weights plus their initial snapshot.
class ParameterSet {
 public:
  void add(std::string name, ParamKind kind, Tensor value);

  const std::vector<ParamTensor>& items() const { return items_; }
  std::vector<ParamTensor>& items() { return items_; }

  ParamTensor* find(const std::string& name);
  const ParamTensor* find(const std::string& name) const;
  ParamTensor& at(const std::string& name);  // throws StateError when absent

  int64_t total_params() const;
  void zero_grads();

  /// Resets a tensor's snapshot to its current values (used only when a head
  /// is replaced; every other snapshot stays frozen for rewinding).
  void reset_initial(const std::string& name);

 private:
  std::vector<ParamTensor> items_;
};

}  // namespace colt
