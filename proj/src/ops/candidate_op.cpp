#include "emdarts/ops/candidate_op.hpp"

#include <cmath>

#include "emdarts/autodiff/functional.hpp"
#include "emdarts/error.hpp"

namespace emdarts::ops {

Tensor he_normal(ad::Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double& v : t.mutable_values()) v = rng.normal() * std;
  return t;
}

BatchNorm BatchNorm::create(ParamStore& store, const std::string& prefix, std::size_t channels) {
  BatchNorm bn;
  bn.gamma = store.add_parameter(prefix + ".gamma", Tensor({channels}, 1.0));
  bn.beta = store.add_parameter(prefix + ".beta", Tensor({channels}, 0.0));
  bn.running_mean = store.add_buffer(prefix + ".running_mean", Tensor({channels}, 0.0));
  bn.running_var = store.add_buffer(prefix + ".running_var", Tensor({channels}, 1.0));
  return bn;
}

Tensor BatchNorm::forward(const Tensor& x, const ForwardContext& ctx) const {
  Tensor mean = running_mean;
  Tensor var = running_var;
  ad::BatchNormOptions opt;
  opt.training = ctx.training();
  opt.update_running_stats = ctx.update_running_stats;
  return ad::batch_norm1d(x, gamma, beta, mean, var, opt);
}

ReluConvBlock ReluConvBlock::create(ParamStore& store, const std::string& prefix, std::size_t c_in,
                                    std::size_t c_out, std::size_t kernel, std::size_t dilation, std::size_t stride,
                                    Rng& rng) {
  ReluConvBlock b;
  b.kernel = kernel;
  b.dilation = dilation;
  b.stride = stride;
  b.depthwise = store.add_parameter(prefix + ".dw", he_normal({c_in, 1, kernel}, kernel, rng));
  b.pointwise = store.add_parameter(prefix + ".pw", he_normal({c_out, c_in, 1}, c_in, rng));
  b.bn = BatchNorm::create(store, prefix + ".bn", c_out);
  return b;
}

Tensor ReluConvBlock::forward(const Tensor& x, const ForwardContext& ctx) const {
  ad::Conv1dOptions dw;
  dw.stride = stride;
  dw.dilation = dilation;
  dw.groups = x.dim(1);
  dw.padding = dilation * (kernel - 1) / 2;
  Tensor h = ad::conv1d(ad::relu(x), depthwise, dw);
  h = ad::conv1d(h, pointwise, ad::Conv1dOptions{});
  return bn.forward(h, ctx);
}

FactorizedReduce FactorizedReduce::create(ParamStore& store, const std::string& prefix, std::size_t c_in,
                                          std::size_t c_out, Rng& rng) {
  if (c_out % 2 != 0) throw ConfigError("factorized reduce needs an even output width");
  FactorizedReduce fr;
  fr.conv_even = store.add_parameter(prefix + ".conv_a", he_normal({c_out / 2, c_in, 1}, c_in, rng));
  fr.conv_odd = store.add_parameter(prefix + ".conv_b", he_normal({c_out / 2, c_in, 1}, c_in, rng));
  fr.bn = BatchNorm::create(store, prefix + ".bn", c_out);
  return fr;
}

Tensor FactorizedReduce::forward(const Tensor& x, const ForwardContext& ctx) const {
  ad::Conv1dOptions opt;
  opt.stride = 2;
  Tensor h = ad::relu(x);
  Tensor a = ad::conv1d(h, conv_even, opt);
  Tensor b = ad::conv1d(ad::shift_time(h, 1), conv_odd, opt);
  const Tensor parts[] = {a, b};
  return bn.forward(ad::concat_channels(parts), ctx);
}

OpInstance OpInstance::create(LocalOpKind kind, std::size_t channels, std::size_t stride, ParamStore& store,
                              const std::string& prefix, Rng& rng) {
  if (channels == 0) throw ConfigError("op channels must be positive");
  if (stride != 1 && stride != 2) throw ConfigError("op stride must be 1 or 2");
  OpInstance op;
  op.kind_ = kind;
  op.channels_ = channels;
  op.stride_ = stride;
  const std::size_t c_out = op.out_channels();
  switch (kind) {
    case LocalOpKind::None:
    case LocalOpKind::MaxPool3:
    case LocalOpKind::AvgPool3:
      break;
    case LocalOpKind::SkipConnect:
      if (stride == 2) op.reduce_.push_back(FactorizedReduce::create(store, prefix + ".reduce", channels, c_out, rng));
      break;
    case LocalOpKind::SepConv3:
    case LocalOpKind::SepConv5: {
      const std::size_t k = kind == LocalOpKind::SepConv3 ? 3 : 5;
      op.blocks_.push_back(ReluConvBlock::create(store, prefix + ".b0", channels, c_out, k, 1, stride, rng));
      op.blocks_.push_back(ReluConvBlock::create(store, prefix + ".b1", c_out, c_out, k, 1, 1, rng));
      break;
    }
    case LocalOpKind::DilConv3:
    case LocalOpKind::DilConv5: {
      const std::size_t k = kind == LocalOpKind::DilConv3 ? 3 : 5;
      op.blocks_.push_back(ReluConvBlock::create(store, prefix + ".b0", channels, c_out, k, 2, stride, rng));
      break;
    }
  }
  return op;
}

std::size_t OpInstance::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) {
    n += b.depthwise.numel() + b.pointwise.numel() + b.bn.gamma.numel() + b.bn.beta.numel();
  }
  for (const auto& r : reduce_) n += r.conv_even.numel() + r.conv_odd.numel() + r.bn.gamma.numel() + r.bn.beta.numel();
  return n;
}

Tensor OpInstance::apply_sparse(const Tensor& x, const ForwardContext& ctx) const {
  if (x.rank() != 3 || x.dim(1) != channels_) {
    throw DimensionError("op " + std::string(op_name(kind_)) + " expects " + std::to_string(channels_) +
                         " channels, got shape " + ad::shape_string(x.shape()));
  }
  switch (kind_) {
    case LocalOpKind::None:
      return Tensor();
    case LocalOpKind::SkipConnect:
      return stride_ == 1 ? x : reduce_.front().forward(x, ctx);
    case LocalOpKind::MaxPool3:
    case LocalOpKind::AvgPool3: {
      ad::Pool1dOptions opt;
      opt.kind = kind_ == LocalOpKind::MaxPool3 ? ad::PoolKind::Max : ad::PoolKind::Avg;
      opt.stride = stride_;
      Tensor pooled = ad::pool1d(x, opt);
      if (stride_ == 1) return pooled;
      // Parameter-free channel doubling keeps pools in the reduction mixture.
      const Tensor parts[] = {pooled, pooled};
      return ad::concat_channels(parts);
    }
    default: {
      Tensor h = x;
      for (const auto& b : blocks_) h = b.forward(h, ctx);
      return h;
    }
  }
}

Tensor OpInstance::apply(const Tensor& x, const ForwardContext& ctx) const {
  Tensor out = apply_sparse(x, ctx);
  if (out.defined()) return out;
  return ad::zeros({x.dim(0), out_channels(), out_length(x.dim(2))});
}

Tensor apply_op(const OpInstance& op, const Tensor& x, const ForwardContext& ctx) { return op.apply(x, ctx); }

}  // namespace emdarts::ops
