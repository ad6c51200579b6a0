#pragma once

#include <functional>
#include <span>

#include "emdarts/ops/candidate_op.hpp"

namespace emdarts::ops {

// sum_e weights[e] * op_e(x) over the 8 local candidates; `none` is skipped.
Tensor mix_candidates(const Tensor& weights, std::span<const OpInstance> ops, const Tensor& x,
                      const ForwardContext& ctx);

// Continuous relaxation of one local edge: softmax(alpha_edge) mixture.
Tensor mixed_local_op(const Tensor& alpha_edge, std::span<const OpInstance> ops, const Tensor& x,
                      const ForwardContext& ctx);

using EdgeFn = std::function<Tensor(const Tensor&)>;

// Continuous relaxation of one global edge over {none, skip_connect, cell}
// with mixture weights softmax(beta_edge). `none` contributes nothing.
Tensor mixed_global_op(const Tensor& beta_edge, const EdgeFn& skip, const EdgeFn& cell, const Tensor& x);

// Same, taking already-normalised weights.
Tensor mix_global(const Tensor& weights, const EdgeFn& skip, const EdgeFn& cell, const Tensor& x);

}  // namespace emdarts::ops
