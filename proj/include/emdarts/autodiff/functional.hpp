#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "emdarts/autodiff/tape.hpp"
#include "emdarts/autodiff/tensor.hpp"

// Differentiable operators. Each op records an adjoint on the active tape
// when at least one input requires a gradient; otherwise it runs untracked.
namespace emdarts::ad {

Tensor zeros(Shape shape);

Tensor add(const Tensor& a, const Tensor& b);
Tensor add_n(std::span<const Tensor> terms);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);

// Numerically stable (max-subtracted) softmax along `axis`.
Tensor softmax(const Tensor& x, std::size_t axis);

// x [N, D], weight [K, D], bias [K] (may be undefined) -> [N, K].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// [N, C, T] -> [N, C].
Tensor global_avg_pool(const Tensor& x);

struct Conv1dOptions {
  std::size_t stride = 1;
  std::size_t dilation = 1;
  std::size_t groups = 1;
  std::size_t padding = 0;
};

// x [N, C_in, T], weight [C_out, C_in / groups, k] with k odd.
// Output length floor((T + 2p - d(k-1) - 1) / s) + 1.
Tensor conv1d(const Tensor& x, const Tensor& weight, const Conv1dOptions& options);

enum class PoolKind { Max, Avg };

struct Pool1dOptions {
  PoolKind kind = PoolKind::Max;
  std::size_t window = 3;
  std::size_t stride = 1;
  std::size_t padding = 1;
};

// Padding positions never participate: max ignores them and avg divides by
// the number of real samples in the window. Max routes its gradient to the
// lowest index among tied maxima.
Tensor pool1d(const Tensor& x, const Pool1dOptions& options);

struct BatchNormOptions {
  bool training = true;
  double momentum = 0.1;
  double eps = 1e-5;
  bool update_running_stats = true;
};

// Per-channel normalization of x [N, C, T] over (N, T). In training mode the
// batch statistics are used and the running buffers are blended in place
// (running_var receives the unbiased batch variance).
Tensor batch_norm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                    Tensor& running_var, const BatchNormOptions& options);

// Mean negative log-likelihood of the true class. logits [N, K].
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

// sum_k weights[k] * candidates[k]. Undefined candidates count as zero and
// are skipped entirely, so their weight receives a zero gradient.
Tensor weighted_sum(const Tensor& weights, std::span<const Tensor> candidates);

// Row `row` of a [R, K] tensor as a [K] tensor.
Tensor select_row(const Tensor& x, std::size_t row);

// Concatenate [N, C_i, T] tensors along the channel axis.
Tensor concat_channels(std::span<const Tensor> parts);

// y[..., t] = x[..., t + offset], zero past the end.
Tensor shift_time(const Tensor& x, std::size_t offset);

// Multiplies every element of sample n by factors[n] (drop-path masks).
Tensor scale_samples(const Tensor& x, std::span<const double> factors);

}  // namespace emdarts::ad
