#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "emdarts/autodiff/param_store.hpp"
#include "emdarts/autodiff/tensor.hpp"
#include "emdarts/ops/context.hpp"
#include "emdarts/ops/op_kind.hpp"
#include "emdarts/rng.hpp"

namespace emdarts::ops {

using ad::ParamStore;
using ad::Tensor;

// He-normal initialised tensor, std = sqrt(2 / fan_in).
Tensor he_normal(ad::Shape shape, std::size_t fan_in, Rng& rng);

struct BatchNorm {
  Tensor gamma;
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;

  static BatchNorm create(ParamStore& store, const std::string& prefix, std::size_t channels);
  Tensor forward(const Tensor& x, const ForwardContext& ctx) const;
};

// ReLU -> depthwise conv (k, dilation, stride) -> pointwise 1x1 -> BatchNorm.
struct ReluConvBlock {
  Tensor depthwise;
  Tensor pointwise;
  BatchNorm bn;
  std::size_t kernel = 3;
  std::size_t dilation = 1;
  std::size_t stride = 1;

  static ReluConvBlock create(ParamStore& store, const std::string& prefix, std::size_t c_in, std::size_t c_out,
                              std::size_t kernel, std::size_t dilation, std::size_t stride, Rng& rng);
  Tensor forward(const Tensor& x, const ForwardContext& ctx) const;
};

// Halves the temporal length and maps c_in -> c_out channels (c_out even):
// ReLU, two 1x1 stride-2 convs on x and on x shifted by one sample, concat, BN.
struct FactorizedReduce {
  Tensor conv_even;
  Tensor conv_odd;
  BatchNorm bn;

  static FactorizedReduce create(ParamStore& store, const std::string& prefix, std::size_t c_in, std::size_t c_out,
                                 Rng& rng);
  Tensor forward(const Tensor& x, const ForwardContext& ctx) const;
};

// One candidate operation on one edge. At stride 2 every kind halves the
// length and doubles the channel count so all candidates stay summable.
class OpInstance {
 public:
  static OpInstance create(LocalOpKind kind, std::size_t channels, std::size_t stride, ParamStore& store,
                           const std::string& prefix, Rng& rng);

  LocalOpKind kind() const { return kind_; }
  std::size_t channels() const { return channels_; }
  std::size_t stride() const { return stride_; }
  std::size_t out_channels() const { return stride_ == 2 ? 2 * channels_ : channels_; }
  std::size_t out_length(std::size_t t) const { return stride_ == 2 ? (t + 1) / 2 : t; }
  std::size_t parameter_count() const;

  // `none` yields an explicit zero tensor.
  Tensor apply(const Tensor& x, const ForwardContext& ctx) const;

  // Like apply(), but `none` yields an undefined tensor that mixtures skip.
  Tensor apply_sparse(const Tensor& x, const ForwardContext& ctx) const;

 private:
  LocalOpKind kind_ = LocalOpKind::None;
  std::size_t channels_ = 0;
  std::size_t stride_ = 1;
  std::vector<ReluConvBlock> blocks_;
  std::vector<FactorizedReduce> reduce_;
};

Tensor apply_op(const OpInstance& op, const Tensor& x, const ForwardContext& ctx);

}  // namespace emdarts::ops
