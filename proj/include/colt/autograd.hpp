#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "colt/tensor.hpp"

namespace colt {

/// Dynamic tape recorded during one forward pass. Nodes are appended in
/// execution order, so inputs of every node precede it and a single reverse
/// sweep is a valid topological traversal.
class Tape {
 public:
  struct Node {
    std::string_view op;
    std::function<void()> backward;
  };

  void record(std::string_view op, std::function<void()> backward_fn) {
    nodes_.push_back(Node{op, std::move(backward_fn)});
  }

  size_t size() const { return nodes_.size(); }

  /// Seeds d(root)/d(root) = 1 and runs every node's backward in reverse
  /// recording order. Gradients accumulate additively, so a tensor feeding
  /// two nodes receives the sum of both path contributions.
  void backward(Tensor& root);

  /// Tape recording ops on the current thread, or nullptr outside a
  /// TapeScope (pure inference).
  static Tape* active();

 private:
  friend class TapeScope;
  std::vector<Node> nodes_;
};

/// RAII activation of a fresh tape for the current thread.
class TapeScope {
 public:
  TapeScope();
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

  Tape& tape() { return tape_; }
  void backward(Tensor& root) { tape_.backward(root); }

 private:
  Tape tape_;
  Tape* prev_;
};

}  // namespace colt
