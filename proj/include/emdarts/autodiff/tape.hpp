#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "emdarts/autodiff/tensor.hpp"

namespace emdarts::ad {

// Ordered record of the operations executed while the tape is active.
// backward() replays the adjoints in exact reverse order, then drops every
// record and every non-leaf gradient. A tape is owned by one thread.
class Tape {
 public:
  using Adjoint = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  void record(std::shared_ptr<TensorNode> output, Adjoint adjoint);

  // Populates grad on every requires_grad leaf reachable from `loss`.
  void backward(const Tensor& loss);

  void clear();
  std::size_t size() const { return records_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Record {
    std::shared_ptr<TensorNode> output;
    Adjoint adjoint;
  };
  std::vector<Record> records_;
  bool consumed_ = false;
};

// Makes `tape` the recording target for ops on this thread while in scope.
// Without an active tape ops run untracked (inference mode).
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;
  ~TapeScope();

 private:
  Tape* previous_;
};

Tape* active_tape();

}  // namespace emdarts::ad
