#include "emdarts/entropy/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "emdarts/autodiff/param_store.hpp"
#include "emdarts/error.hpp"
#include "emdarts/rng.hpp"

namespace emdarts::entropy {

double layer_entropy(const ad::Tensor& z) {
  if (z.rank() != 3) throw DimensionError("layer_entropy expects [B, C, T], got " + ad::shape_string(z.shape()));
  const std::size_t b = z.dim(0), c = z.dim(1), t = z.dim(2);
  if (b * t < 2) throw InputError("layer_entropy needs at least 2 samples per channel");
  const auto v = z.values();
  const double n = static_cast<double>(b * t);
  double h = 0.0;
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      const double* row = v.data() + (i * c + ch) * t;
      for (std::size_t k = 0; k < t; ++k) sum += row[k];
    }
    const double mean = sum / n;
    double sq = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      const double* row = v.data() + (i * c + ch) * t;
      for (std::size_t k = 0; k < t; ++k) sq += (row[k] - mean) * (row[k] - mean);
    }
    h += std::log(std::max(std::sqrt(sq / n), kStdFloor));
  }
  return h;
}

double transfer_entropy(double h_prev, double h_cur) { return std::fabs(h_cur - h_prev); }

data::Batch probe_batch(const data::Dataset& d, std::uint64_t seed, std::size_t max_size) {
  if (d.size() == 0 || max_size == 0) throw InputError("probe batch would be empty");
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "probe"));
  rng.shuffle(std::span(idx));
  idx.resize(std::min(max_size, d.size()));
  std::sort(idx.begin(), idx.end());
  return data::make_batch(d, idx, data::SplitTag::Probe);
}

LayerTrace collect_trace(const nas::Model& model, const data::Batch& probe, ops::Mode mode) {
  if (!probe.x.defined() || probe.size() == 0) throw InputError("empty probe batch");
  ops::ForwardContext ctx;
  ctx.mode = mode;
  ctx.update_running_stats = false;
  return {model.forward(probe.x, ctx).nodes};
}

double EntropyReport::transfer(std::size_t i) const {
  if (i == 0 || i >= te.size() || !te[i]) throw InputError("transfer entropy is defined for layers 1.." +
                                                           std::to_string(te.size() - 1));
  return *te[i];
}

EntropyReport entropy_report(const LayerTrace& trace) {
  EntropyReport r;
  for (const auto& z : trace.nodes) r.h_sigma.push_back(layer_entropy(z));
  r.te.resize(r.h_sigma.size());
  for (std::size_t i = 1; i < r.h_sigma.size(); ++i) r.te[i] = transfer_entropy(r.h_sigma[i - 1], r.h_sigma[i]);
  if (!trace.nodes.empty()) r.probe_size = trace.nodes.front().dim(0);
  return r;
}

void write_entropy_csv(const EntropyReport& r, std::ostream& out) {
  out << "layer_index,H_sigma,TE\n";
  char buf[64];
  for (std::size_t i = 0; i < r.h_sigma.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", r.h_sigma[i]);
    out << i << ',' << buf << ',';
    if (r.te[i]) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.te[i]);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace emdarts::entropy
