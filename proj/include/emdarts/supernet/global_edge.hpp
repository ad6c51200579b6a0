#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "emdarts/ops/candidate_op.hpp"
#include "emdarts/supernet/cell.hpp"
#include "emdarts/supernet/geometry.hpp"

namespace emdarts::nas {

// conv 4 -> C (k=3, same padding) followed by BatchNorm.
struct Stem {
  Tensor weight;
  ops::BatchNorm bn;

  static Stem create(std::size_t channels, ad::ParamStore& store, Rng& rng);
  Tensor forward(const Tensor& x, const ops::ForwardContext& ctx) const;
};

// Linear classifier over pooled features.
struct Head {
  Tensor weight;
  Tensor bias;

  static Head create(std::size_t features, std::size_t classes, ad::ParamStore& store, Rng& rng);
  Tensor forward(const Tensor& embedding) const;
};

// The computation carried by global edge (from, to). When the edge crosses k
// reduction nodes, skip is a chain of k factorized reductions and the cell is
// preceded by k-1 of them and runs at stride 2.
class GlobalEdge {
 public:
  // Holds both the skip path and a search cell.
  static GlobalEdge create_search(const Geometry& g, std::size_t from, std::size_t to, ad::ParamStore& store,
                                  Rng& rng);
  // Holds only what `op` needs. `cell` must be given when op is Cell.
  static GlobalEdge create_discrete(const Geometry& g, std::size_t from, std::size_t to, ops::GlobalOpKind op,
                                    const CellGenotype* cell, ad::ParamStore& store, Rng& rng);

  std::size_t from() const { return from_; }
  std::size_t to() const { return to_; }
  std::size_t reductions() const { return reductions_; }
  ops::GlobalOpKind op() const { return op_; }
  bool has_cell() const { return cell_.has_value(); }
  const Cell& cell() const { return *cell_; }
  bool cell_stride_two() const { return reductions_ > 0; }

  Tensor skip(const Tensor& x, const ops::ForwardContext& ctx) const;
  Tensor cell_forward(const Tensor& x, const Tensor& alpha, const ops::ForwardContext& ctx) const;

  // Discrete edges only: the chosen op's output, undefined for `none`.
  Tensor forward(const Tensor& x, const ops::ForwardContext& ctx) const;

 private:
  std::size_t from_ = 0;
  std::size_t to_ = 0;
  std::size_t reductions_ = 0;
  ops::GlobalOpKind op_ = ops::GlobalOpKind::None;
  std::vector<ops::FactorizedReduce> skip_chain_;
  std::vector<ops::FactorizedReduce> prefix_;
  std::optional<Cell> cell_;
};

// Output of a full network pass.
struct ForwardResult {
  Tensor logits;                // [B, K]
  Tensor embedding;             // [B, C_last], pooled final node
  std::vector<Tensor> nodes;    // every global node's feature map
};

}  // namespace emdarts::nas
