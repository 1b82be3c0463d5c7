#include "colt/mask.hpp"

#include <bit>

#include "colt/error.hpp"

namespace colt {

BitField::BitField(int64_t bit_count, bool value) : bits_(bit_count) {
  bytes_.assign(static_cast<size_t>((bit_count + 7) / 8), value ? 0xFFu : 0x00u);
  if (value && bit_count % 8 != 0) {
    // keep padding bits zero so byte comparisons stay canonical
    bytes_.back() = static_cast<uint8_t>((1u << (bit_count % 8)) - 1u);
  }
}

int64_t BitField::count_ones() const {
  int64_t n = 0;
  for (uint8_t b : bytes_) n += std::popcount(b);
  return n;
}

void BitField::and_with(const BitField& other) {
  if (other.bits_ != bits_) {
    throw AlignmentError("bitfield length mismatch: " + std::to_string(bits_) + " vs " +
                         std::to_string(other.bits_));
  }
  for (size_t i = 0; i < bytes_.size(); ++i) bytes_[i] &= other.bytes_[i];
}

BitField BitField::from_bytes(int64_t bit_count, std::vector<uint8_t> bytes) {
  if (static_cast<int64_t>(bytes.size()) != (bit_count + 7) / 8) {
    throw AlignmentError("bitfield byte count does not cover " + std::to_string(bit_count) +
                         " bits");
  }
  BitField f;
  f.bits_ = bit_count;
  f.bytes_ = std::move(bytes);
  if (bit_count % 8 != 0 && !f.bytes_.empty()) {
    f.bytes_.back() &= static_cast<uint8_t>((1u << (bit_count % 8)) - 1u);
  }
  return f;
}

const char* eligibility_rule_name(EligibilityRule r) {
  return r == EligibilityRule::conv_only ? "conv-only" : "all-weights";
}

Mask Mask::ones_like(const ParameterSet& params, EligibilityRule rule) {
  bool has_conv = false;
  for (const auto& it : params.items()) {
    if (it.kind == ParamKind::conv) has_conv = true;
  }
  Mask m;
  for (const auto& it : params.items()) {
    const bool weight_kind = it.kind == ParamKind::conv || it.kind == ParamKind::linear;
    bool eligible = weight_kind && !is_head_param(it.name);
    if (eligible && rule == EligibilityRule::conv_only && has_conv) {
      eligible = it.kind == ParamKind::conv;
    }
    MaskEntry e;
    e.name = it.name;
    e.bits = it.value.numel();
    e.eligible = eligible;
    e.field = BitField(e.bits, true);
    m.entries_.push_back(std::move(e));
  }
  return m;
}

MaskEntry* Mask::find(const std::string& name) {
  for (auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const MaskEntry* Mask::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

int64_t Mask::total_bits() const {
  int64_t n = 0;
  for (const auto& e : entries_) n += e.bits;
  return n;
}

int64_t Mask::total_zeros() const {
  int64_t n = 0;
  for (const auto& e : entries_) n += e.bits - e.field.count_ones();
  return n;
}

int64_t Mask::eligible_bits() const {
  int64_t n = 0;
  for (const auto& e : entries_) {
    if (e.eligible) n += e.bits;
  }
  return n;
}

int64_t Mask::eligible_zeros() const {
  int64_t n = 0;
  for (const auto& e : entries_) {
    if (e.eligible) n += e.bits - e.field.count_ones();
  }
  return n;
}

bool Mask::same_structure(const Mask& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.bits != b.bits || a.eligible != b.eligible) return false;
  }
  return true;
}

void Mask::check_aligned(const ParameterSet& params) const {
  if (entries_.size() != params.items().size()) {
    throw AlignmentError("mask has " + std::to_string(entries_.size()) + " entries for " +
                         std::to_string(params.items().size()) + " tensors");
  }
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    const auto& p = params.items()[i];
    if (e.name != p.name || e.bits != p.value.numel()) {
      throw AlignmentError("mask entry '" + e.name + "' (" + std::to_string(e.bits) +
                           " bits) does not align with tensor '" + p.name + "' (" +
                           std::to_string(p.value.numel()) + " elements)");
    }
  }
}

Mask Mask::restrict_non_head() const {
  Mask m;
  for (const auto& e : entries_) {
    if (!is_head_param(e.name)) m.entries_.push_back(e);
  }
  return m;
}

Mask Mask::expand_for(const ParameterSet& params) const {
  Mask m;
  for (const auto& p : params.items()) {
    if (is_head_param(p.name)) {
      MaskEntry e;
      e.name = p.name;
      e.bits = p.value.numel();
      e.eligible = false;
      e.field = BitField(e.bits, true);
      m.entries_.push_back(std::move(e));
      continue;
    }
    const MaskEntry* src = find(p.name);
    if (!src || src->bits != p.value.numel()) {
      throw AlignmentError("no mask entry aligned with tensor '" + p.name + "' (" +
                           std::to_string(p.value.numel()) + " elements)");
    }
    m.entries_.push_back(*src);
  }
  return m;
}

}  // namespace colt
