#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "emdarts/autodiff/param_store.hpp"
#include "emdarts/ops/candidate_op.hpp"
#include "emdarts/supernet/genotype.hpp"

namespace emdarts::nas {

using ad::Tensor;

struct CellSpec {
  std::size_t in_channels = 8;
  std::size_t stride = 1;  // 2 for reduction cells
  std::size_t cell_nodes = 2;

  std::size_t out_channels() const { return stride == 2 ? 2 * in_channels : in_channels; }
};

// A local DAG sitting on one global edge. Both cell inputs receive the edge's
// source tensor. Each intermediate node sums its incoming edges; the output
// concatenates the intermediates and projects back to out_channels with a
// 1x1 convolution.
//
// A search cell carries all 8 candidates on every edge and is driven by an
// alpha block of shape [num_local_edges, 8]. A discrete cell carries one op
// per retained edge.
class Cell {
 public:
  static Cell create_search(const CellSpec& spec, ad::ParamStore& store, const std::string& prefix, Rng& rng);
  static Cell create_discrete(const CellSpec& spec, std::span<const LocalEdgeChoice> edges, ad::ParamStore& store,
                              const std::string& prefix, Rng& rng);

  const CellSpec& spec() const { return spec_; }
  bool is_search() const { return search_; }
  const Tensor& projection() const { return projection_; }

  // Channel-concatenated intermediate nodes, before projection.
  Tensor features(const Tensor& x, const Tensor& alpha, const ops::ForwardContext& ctx) const;
  Tensor forward(const Tensor& x, const Tensor& alpha, const ops::ForwardContext& ctx) const;

 private:
  struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;
    std::vector<ops::OpInstance> ops;
  };

  Tensor drop_path(const Tensor& y, const ops::ForwardContext& ctx) const;

  CellSpec spec_;
  bool search_ = false;
  std::vector<Edge> edges_;
  Tensor projection_;
};

}  // namespace emdarts::nas
