#include "emdarts/autodiff/tape.hpp"

#include "emdarts/error.hpp"

namespace emdarts::ad {

namespace {
thread_local Tape* current_tape = nullptr;
}

Tape::~Tape() {
  if (current_tape == this) current_tape = nullptr;
}

void Tape::record(std::shared_ptr<TensorNode> output, Adjoint adjoint) {
  if (consumed_) {
    consumed_ = false;
  }
  records_.push_back(Record{std::move(output), std::move(adjoint)});
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw StateError("backward called twice on the same tape without a new forward pass");
  if (!loss.defined()) throw StateError("backward on an undefined tensor");
  if (loss.numel() != 1) throw DimensionError("backward needs a scalar loss, got shape " + shape_string(loss.shape()));
  if (records_.empty() || !loss.requires_grad() || loss.is_leaf()) {
    throw StateError("loss was not produced by a live tape");
  }
  loss.node()->ensure_grad()[0] = 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->output->grad.empty()) continue;  // not reached from the loss
    it->adjoint();
  }
  clear();
  consumed_ = true;
}

void Tape::clear() {
  for (Record& r : records_) {
    r.output->grad.clear();
    r.output->grad.shrink_to_fit();
  }
  records_.clear();
  consumed_ = false;
}

TapeScope::TapeScope(Tape& tape) : previous_(current_tape) { current_tape = &tape; }

TapeScope::~TapeScope() { current_tape = previous_; }

Tape* active_tape() { return current_tape; }

}  // namespace emdarts::ad
