#include "emdarts/ops/mixed.hpp"

#include <vector>

#include "emdarts/autodiff/functional.hpp"
#include "emdarts/error.hpp"

namespace emdarts::ops {

Tensor mix_candidates(const Tensor& weights, std::span<const OpInstance> ops, const Tensor& x,
                      const ForwardContext& ctx) {
  if (ops.size() != kNumLocalOps) throw DimensionError("mixed local op needs all 8 candidates");
  std::vector<Tensor> outputs;
  outputs.reserve(ops.size());
  for (const OpInstance& op : ops) outputs.push_back(op.apply_sparse(x, ctx));
  return ad::weighted_sum(weights, outputs);
}

Tensor mixed_local_op(const Tensor& alpha_edge, std::span<const OpInstance> ops, const Tensor& x,
                      const ForwardContext& ctx) {
  return mix_candidates(ad::softmax(alpha_edge, 0), ops, x, ctx);
}

Tensor mix_global(const Tensor& weights, const EdgeFn& skip, const EdgeFn& cell, const Tensor& x) {
  const Tensor outputs[] = {Tensor(), skip(x), cell(x)};
  return ad::weighted_sum(weights, outputs);
}

Tensor mixed_global_op(const Tensor& beta_edge, const EdgeFn& skip, const EdgeFn& cell, const Tensor& x) {
  return mix_global(ad::softmax(beta_edge, 0), skip, cell, x);
}

}  // namespace emdarts::ops
