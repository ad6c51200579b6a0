#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "emdarts/autodiff/tensor.hpp"
#include "emdarts/data/dataset.hpp"
#include "emdarts/ops/context.hpp"
#include "emdarts/supernet/model.hpp"

namespace emdarts::entropy {

inline constexpr double kStdFloor = 1e-8;

// Sum over channels of log(max(std, kStdFloor)), std taken over the batch and
// time axes of a [B, C, T] feature map (population std).
double layer_entropy(const ad::Tensor& z);

// |h_cur - h_prev|.
double transfer_entropy(double h_prev, double h_cur);

// Feature map of every global node for one probe batch.
struct LayerTrace {
  std::vector<ad::Tensor> nodes;
};

// Fixed probe: min(max_size, |d|) windows sampled without replacement.
data::Batch probe_batch(const data::Dataset& d, std::uint64_t seed, std::size_t max_size = 1024);

// Eval mode by default (BN running statistics, no drop-path); no tape.
// Throws InputError on an empty probe.
LayerTrace collect_trace(const nas::Model& model, const data::Batch& probe, ops::Mode mode = ops::Mode::Eval);

struct EntropyReport {
  std::vector<double> h_sigma;             // per layer
  std::vector<std::optional<double>> te;   // te[0] is empty
  std::uint64_t probe_seed = 0;
  std::size_t probe_size = 0;

  // TE_i for i >= 1; InputError for i == 0 or out of range.
  double transfer(std::size_t i) const;
};

EntropyReport entropy_report(const LayerTrace& trace);

// CSV with header layer_index,H_sigma,TE (TE blank for layer 0).
void write_entropy_csv(const EntropyReport& r, std::ostream& out);

}  // namespace emdarts::entropy
