#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "emdarts/autodiff/param_store.hpp"
#include "emdarts/supernet/genotype.hpp"
#include "emdarts/supernet/geometry.hpp"
#include "emdarts/supernet/global_edge.hpp"
#include "emdarts/supernet/model.hpp"

namespace emdarts::nas {

enum class AlphaSharing {
  PerCell,  // one alpha block per global edge
  Shared,   // one block for normal cells and one for stride-2 cells
};

// Continuous supernet over the full upper-triangular global DAG. Weights
// (conv/BN/linear) live in weights(); architecture logits (alpha blocks and
// beta) live in a separate registry so optimizers never mix them.
class Supernet : public Model {
 public:
  Supernet(const SupernetConfig& cfg, std::uint64_t seed, AlphaSharing sharing = AlphaSharing::PerCell);

  Supernet(const Supernet&) = delete;
  Supernet& operator=(const Supernet&) = delete;
  Supernet(Supernet&&) = default;
  Supernet& operator=(Supernet&&) = default;

  const SupernetConfig& config() const { return config_; }
  const Geometry& geometry() const { return geometry_; }
  AlphaSharing sharing() const { return sharing_; }

  ForwardResult forward(const Tensor& x, const ops::ForwardContext& ctx) const override;

  ad::ParamStore& weights() override { return weights_; }
  const ad::ParamStore& weights() const override { return weights_; }

  // Distinct alpha tensors, each [num_local_edges, 8].
  const std::vector<ad::NamedTensor>& alpha_blocks() const { return alpha_blocks_; }
  // The alpha block driving the cell on global edge `edge`.
  const Tensor& alpha(std::size_t edge) const { return alpha_blocks_[alpha_of_edge_[edge]].tensor; }
  std::size_t alpha_block_index(std::size_t edge) const { return alpha_of_edge_[edge]; }
  // [num_global_edges, 3] over (none, skip_connect, cell).
  const Tensor& beta() const { return beta_.tensor; }
  std::vector<ad::NamedTensor> alpha_parameters() const { return alpha_blocks_; }
  std::vector<ad::NamedTensor> beta_parameters() const { return {beta_}; }
  std::vector<ad::NamedTensor> arch_parameters() const;

  std::size_t weight_count() const { return weights_.parameter_count(); }

  Genotype discretize() const;

  // Alpha block per global edge, in global edge order.
  std::vector<Tensor> alphas_per_edge() const;

 private:
  SupernetConfig config_;
  Geometry geometry_;
  AlphaSharing sharing_;
  ad::ParamStore weights_;
  Stem stem_;
  std::vector<GlobalEdge> edges_;
  Head head_;
  std::vector<ad::NamedTensor> alpha_blocks_;
  std::vector<std::size_t> alpha_of_edge_;
  ad::NamedTensor beta_;
};

// Argmax discretization. Global: argmax of each beta row. Local: for each
// intermediate node keep the two incoming edges whose best non-none softmax
// weight is largest, labelled with that op; ties go to the lower op index and
// then to the lower source node.
Genotype discretize(const Geometry& geometry, std::span<const Tensor> alpha_per_edge, const Tensor& beta);

}  // namespace emdarts::nas
