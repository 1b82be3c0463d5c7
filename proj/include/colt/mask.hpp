#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colt/params.hpp"

namespace colt {

/// Packed bitfield, LSB-first within each byte. Bit 1 = keep, 0 = pruned.
class BitField {
 public:
  BitField() = default;
  explicit BitField(int64_t bit_count, bool value = true);

  int64_t size() const { return bits_; }
  bool get(int64_t i) const {
    return (bytes_[static_cast<size_t>(i >> 3)] >> (i & 7)) & 1u;
  }
  void set(int64_t i, bool v) {
    const size_t byte = static_cast<size_t>(i >> 3);
    const uint8_t bit = static_cast<uint8_t>(1u << (i & 7));
    if (v)
      bytes_[byte] |= bit;
    else
      bytes_[byte] &= static_cast<uint8_t>(~bit);
  }
  int64_t count_ones() const;
  void and_with(const BitField& other);

  const std::vector<uint8_t>& bytes() const { return bytes_; }
  static BitField from_bytes(int64_t bit_count, std::vector<uint8_t> bytes);

  bool operator==(const BitField&) const = default;

 private:
  int64_t bits_ = 0;
  std::vector<uint8_t> bytes_;
};

/// Which weight tensors magnitude pruning may touch. Output-layer ("head.*")
/// tensors, biases and normalization parameters are never eligible; under
/// conv_only an architecture without conv tensors falls back to its hidden
/// linear weights.
enum class EligibilityRule { conv_only, all_weights };

const char* eligibility_rule_name(EligibilityRule r);

struct MaskEntry {
  std::string name;
  int64_t bits = 0;  // element count of the aligned tensor
  bool eligible = false;
  BitField field;

  bool operator==(const MaskEntry&) const = default;
};

/// Per-tensor binary keep/prune fields aligned with a ParameterSet.
/// Ineligible tensors are always all-ones.
class Mask {
 public:
  static Mask ones_like(const ParameterSet& params, EligibilityRule rule);

  const std::vector<MaskEntry>& entries() const { return entries_; }
  std::vector<MaskEntry>& entries() { return entries_; }
  void add_entry(MaskEntry e) { entries_.push_back(std::move(e)); }

  MaskEntry* find(const std::string& name);
  const MaskEntry* find(const std::string& name) const;

  int64_t total_bits() const;
  int64_t total_zeros() const;
  int64_t eligible_bits() const;
  int64_t eligible_zeros() const;

  /// Identical names, sizes and eligibility flags (field contents may differ).
  bool same_structure(const Mask& other) const;

  /// Throws AlignmentError unless entries match the parameter set pairwise.
  void check_aligned(const ParameterSet& params) const;

  /// Sub-mask without head entries (the universe shared across class heads).
  Mask restrict_non_head() const;

  /// Full-model mask for `params`: copies matching entries, adds all-ones
  /// ineligible entries for the head tensors. Throws AlignmentError when a
  /// non-head tensor has no entry or sizes disagree.
  Mask expand_for(const ParameterSet& params) const;

  bool operator==(const Mask&) const = default;

 private:
  std::vector<MaskEntry> entries_;
};

}  // namespace colt
