#include "colt/autograd.hpp"

#include "colt/error.hpp"

namespace colt {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape* Tape::active() { return g_active_tape; }

void Tape::backward(Tensor& root) {
  if (!root.valid() || root.numel() != 1) {
    throw UsageError("backward root must be a scalar, got shape " +
                     (root.valid() ? shape_str(root.shape()) : std::string("<empty>")));
  }
  root.grad()[0] = 1.0f;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    it->backward();
  }
}

TapeScope::TapeScope() : prev_(g_active_tape) { g_active_tape = &tape_; }

TapeScope::~TapeScope() { g_active_tape = prev_; }

}  // namespace colt
