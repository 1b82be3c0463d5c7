#include "colt/params.hpp"

#include "colt/error.hpp"

namespace colt {

const char* param_kind_name(ParamKind k) {
  switch (k) {
    case ParamKind::conv: return "conv";
    case ParamKind::linear: return "linear";
    case ParamKind::bias: return "bias";
    case ParamKind::norm: return "norm";
  }
  return "?";
}

bool is_head_param(const std::string& name) { return name.rfind("head.", 0) == 0; }

void ParameterSet::add(std::string name, ParamKind kind, Tensor value) {
  if (find(name)) throw StateError("duplicate parameter name '" + name + "'");
  value.set_requires_grad(true);
  ParamTensor pt;
  pt.name = std::move(name);
  pt.kind = kind;
  pt.initial.assign(value.data().begin(), value.data().end());
  pt.value = std::move(value);
  items_.push_back(std::move(pt));
}

ParamTensor* ParameterSet::find(const std::string& name) {
  for (auto& it : items_) {
    if (it.name == name) return &it;
  }
  return nullptr;
}

const ParamTensor* ParameterSet::find(const std::string& name) const {
  for (const auto& it : items_) {
    if (it.name == name) return &it;
  }
  return nullptr;
}

ParamTensor& ParameterSet::at(const std::string& name) {
  ParamTensor* p = find(name);
  if (!p) throw StateError("no parameter named '" + name + "'");
  return *p;
}

int64_t ParameterSet::total_params() const {
  int64_t n = 0;
  for (const auto& it : items_) n += it.value.numel();
  return n;
}

void ParameterSet::zero_grads() {
  for (auto& it : items_) it.value.zero_grad();
}

void ParameterSet::reset_initial(const std::string& name) {
  ParamTensor& pt = at(name);
  pt.initial.assign(pt.value.data().begin(), pt.value.data().end());
}

}  // namespace colt
