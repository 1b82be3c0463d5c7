#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colt/params.hpp"
#include "colt/tensor.hpp"

namespace colt {

enum class Arch { mlp, conv3s };
enum class NormMode { none, per_batch };

const char* arch_name(Arch a);
Arch arch_from_name(const std::string& name);  // throws ConfigError

struct ModelSpec {
  Arch arch = Arch::conv3s;
  std::vector<int> hidden = {256, 128};      // mlp hidden layer widths
  std::vector<int> channels = {16, 32, 64};  // conv3s channels per block
  int num_classes = 10;
  int in_channels = 3;
  int in_height = 16;
  int in_width = 16;
  NormMode norm = NormMode::none;

  void validate() const;  // throws ConfigError
  bool operator==(const ModelSpec&) const = default;
};

/// conv3s: per block conv3x3(pad 1) + bias [+ per-batch norm] + relu +
/// maxpool2, then global average pooling into a linear head. The pooling
/// makes the non-head weights independent of the spatial input size.
/// mlp: flatten + two hidden linear+relu layers into a linear head.
class Model {
 public:
  static Model build(const ModelSpec& spec, uint64_t seed);

  /// x is [B,C,H,W]; returns logits [B,num_classes]. Records on the active
  /// tape when one exists.
  Tensor forward(const Tensor& x) const;

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const ModelSpec& spec() const { return spec_; }

  /// Swaps the output layer for a fresh Xavier-initialized one sized for
  /// new_num_classes. All other tensors are untouched; the new head's
  /// snapshot is its fresh initialization.
  void replace_head(int new_num_classes, uint64_t seed);

  int feature_dim() const;  // width of the head's input

 private:
  ModelSpec spec_;
  ParameterSet params_;
};

}  // namespace colt
