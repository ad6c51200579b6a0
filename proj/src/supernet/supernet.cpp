#include "emdarts/supernet/supernet.hpp"

#include <algorithm>

#include "emdarts/autodiff/functional.hpp"
#include "emdarts/error.hpp"
#include "emdarts/ops/mixed.hpp"

namespace emdarts::nas {

namespace {

Tensor small_normal(ad::Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.mutable_values()) v = 1e-3 * rng.normal();
  t.set_requires_grad(true);
  return t;
}

}  // namespace

Supernet::Supernet(const SupernetConfig& cfg, std::uint64_t seed, AlphaSharing sharing)
    : config_(cfg), geometry_((cfg.validate(), cfg)), sharing_(sharing) {
  Rng rng(derive_seed(seed, "weights"));
  stem_ = Stem::create(geometry_.stem_channels(), weights_, rng);
  for (auto [i, j] : geometry_.global_edges()) edges_.push_back(GlobalEdge::create_search(geometry_, i, j, weights_, rng));
  head_ = Head::create(geometry_.channels(geometry_.nodes() - 1), cfg.num_classes, weights_, rng);

  Rng arch_rng(derive_seed(seed, "arch"));
  const ad::Shape alpha_shape{geometry_.num_local_edges(), ops::kNumLocalOps};
  if (sharing_ == AlphaSharing::PerCell) {
    for (const auto& e : edges_) {
      alpha_of_edge_.push_back(alpha_blocks_.size());
      alpha_blocks_.push_back({"alpha." + edge_prefix(e.from(), e.to()), small_normal(alpha_shape, arch_rng)});
    }
  } else {
    alpha_blocks_.push_back({"alpha.normal", small_normal(alpha_shape, arch_rng)});
    alpha_blocks_.push_back({"alpha.reduce", small_normal(alpha_shape, arch_rng)});
    for (const auto& e : edges_) alpha_of_edge_.push_back(e.cell_stride_two() ? 1 : 0);
  }
  beta_ = {"beta", small_normal({geometry_.num_global_edges(), ops::kNumGlobalOps}, arch_rng)};
}

std::vector<ad::NamedTensor> Supernet::arch_parameters() const {
  std::vector<ad::NamedTensor> out = alpha_blocks_;
  out.push_back(beta_);
  return out;
}

std::vector<Tensor> Supernet::alphas_per_edge() const {
  std::vector<Tensor> out;
  for (std::size_t e = 0; e < edges_.size(); ++e) out.push_back(alpha(e));
  return out;
}

ForwardResult Supernet::forward(const Tensor& x, const ops::ForwardContext& ctx) const {
  ForwardResult result;
  result.nodes.push_back(stem_.forward(x, ctx));
  const Tensor beta_weights = ad::softmax(beta_.tensor, 1);
  std::size_t e = 0;
  for (std::size_t j = 1; j < geometry_.nodes(); ++j) {
    std::vector<Tensor> incoming;
    for (std::size_t i = 0; i < j; ++i, ++e) {
      const GlobalEdge& edge = edges_[e];
      const Tensor& a = alpha(e);
      ops::EdgeFn skip = [&](const Tensor& in) { return edge.skip(in, ctx); };
      ops::EdgeFn cell = [&](const Tensor& in) { return edge.cell_forward(in, a, ctx); };
      incoming.push_back(ops::mix_global(ad::select_row(beta_weights, e), skip, cell, result.nodes[i]));
    }
    result.nodes.push_back(ad::add_n(incoming));
  }
  result.embedding = ad::global_avg_pool(result.nodes.back());
  result.logits = head_.forward(result.embedding);
  return result;
}

Genotype Supernet::discretize() const {
  const auto alphas = alphas_per_edge();
  return nas::discretize(geometry_, alphas, beta_.tensor);
}

Genotype discretize(const Geometry& geometry, std::span<const Tensor> alpha_per_edge, const Tensor& beta) {
  const std::size_t edges = geometry.num_global_edges();
  if (alpha_per_edge.size() != edges) throw DimensionError("discretize needs one alpha block per global edge");
  if (beta.shape() != ad::Shape{edges, ops::kNumGlobalOps}) throw DimensionError("discretize: beta shape mismatch");
  Genotype g;
  g.nodes = geometry.nodes();
  g.cell_nodes = geometry.cell_nodes();
  g.stem_channels = geometry.stem_channels();
  g.reduction_nodes = geometry.reduction_nodes();

  const auto local_edges = geometry.local_edges();
  std::size_t e = 0;
  for (auto [i, j] : geometry.global_edges()) {
    const auto row = beta.values().subspan(e * ops::kNumGlobalOps, ops::kNumGlobalOps);
    const std::size_t best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    const ops::GlobalOpKind op = ops::kAllGlobalOps[best];
    g.global_edges.push_back({i, j, op});
    if (op == ops::GlobalOpKind::Cell) {
      const Tensor& alpha = alpha_per_edge[e];
      if (alpha.shape() != ad::Shape{local_edges.size(), ops::kNumLocalOps}) {
        throw DimensionError("discretize: alpha shape mismatch on " + edge_prefix(i, j));
      }
      const Tensor w = ad::softmax(alpha, 1);
      CellGenotype cell{i, j, {}};
      struct Candidate {
        double weight;
        std::size_t op;
        std::size_t from;
      };
      for (std::size_t to = 2; to < geometry.cell_nodes() + 2; ++to) {
        std::vector<Candidate> candidates;
        for (std::size_t from = 0; from < to; ++from) {
          const auto probs = w.values().subspan(Geometry::local_edge_index(from, to) * ops::kNumLocalOps,
                                                ops::kNumLocalOps);
          const std::size_t op = static_cast<std::size_t>(std::max_element(probs.begin() + 1, probs.end()) -
                                                          probs.begin());
          candidates.push_back({probs[op], op, from});
        }
        std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
          if (a.weight != b.weight) return a.weight > b.weight;
          if (a.op != b.op) return a.op < b.op;
          return a.from < b.from;
        });
        std::vector<LocalEdgeChoice> kept;
        for (std::size_t k = 0; k < 2; ++k) kept.push_back({candidates[k].from, to, ops::kAllLocalOps[candidates[k].op]});
        std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.from < b.from; });
        cell.edges.insert(cell.edges.end(), kept.begin(), kept.end());
      }
      g.cells.push_back(std::move(cell));
    }
    ++e;
  }
  return g;
}

}  // namespace emdarts::nas
