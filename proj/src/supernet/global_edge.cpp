#include "emdarts/supernet/global_edge.hpp"

#include "emdarts/autodiff/functional.hpp"
#include "emdarts/error.hpp"

namespace emdarts::nas {

Stem Stem::create(std::size_t channels, ad::ParamStore& store, Rng& rng) {
  Stem s;
  s.weight = store.add_parameter("stem.conv", ops::he_normal({channels, kInputChannels, 3}, kInputChannels * 3, rng));
  s.bn = ops::BatchNorm::create(store, "stem.bn", channels);
  return s;
}

Tensor Stem::forward(const Tensor& x, const ops::ForwardContext& ctx) const {
  if (x.rank() != 3 || x.dim(1) != kInputChannels) {
    throw DimensionError("network input must be [batch, 4, T], got " + ad::shape_string(x.shape()));
  }
  ad::Conv1dOptions opt;
  opt.padding = 1;
  return bn.forward(ad::conv1d(x, weight, opt), ctx);
}

Head Head::create(std::size_t features, std::size_t classes, ad::ParamStore& store, Rng& rng) {
  Head h;
  h.weight = store.add_parameter("head.weight", ops::he_normal({classes, features}, features, rng));
  h.bias = store.add_parameter("head.bias", Tensor({classes}, 0.0));
  return h;
}

Tensor Head::forward(const Tensor& embedding) const { return ad::linear(embedding, weight, bias); }

namespace {

std::vector<ops::FactorizedReduce> reduce_chain(std::size_t count, std::size_t channels, ad::ParamStore& store,
                                                const std::string& prefix, Rng& rng) {
  std::vector<ops::FactorizedReduce> chain;
  for (std::size_t r = 0; r < count; ++r) {
    chain.push_back(ops::FactorizedReduce::create(store, prefix + ".r" + std::to_string(r), channels << r,
                                                  channels << (r + 1), rng));
  }
  return chain;
}

Cell make_cell(const Geometry& g, std::size_t from, std::size_t k, const CellGenotype* genotype,
               ad::ParamStore& store, const std::string& prefix, Rng& rng) {
  CellSpec spec;
  spec.in_channels = k == 0 ? g.channels(from) : g.channels(from) << (k - 1);
  spec.stride = k == 0 ? 1 : 2;
  spec.cell_nodes = g.cell_nodes();
  if (genotype == nullptr) return Cell::create_search(spec, store, prefix + ".cell", rng);
  return Cell::create_discrete(spec, genotype->edges, store, prefix + ".cell", rng);
}

}  // namespace

GlobalEdge GlobalEdge::create_search(const Geometry& g, std::size_t from, std::size_t to, ad::ParamStore& store,
                                     Rng& rng) {
  if (from >= to || to >= g.nodes()) throw ConfigError("invalid global edge");
  GlobalEdge e;
  e.from_ = from;
  e.to_ = to;
  e.reductions_ = g.level(to) - g.level(from);
  const std::string prefix = edge_prefix(from, to);
  e.skip_chain_ = reduce_chain(e.reductions_, g.channels(from), store, prefix + ".skip", rng);
  if (e.reductions_ > 1) e.prefix_ = reduce_chain(e.reductions_ - 1, g.channels(from), store, prefix + ".prefix", rng);
  e.cell_.emplace(make_cell(g, from, e.reductions_, nullptr, store, prefix, rng));
  return e;
}

GlobalEdge GlobalEdge::create_discrete(const Geometry& g, std::size_t from, std::size_t to, ops::GlobalOpKind op,
                                       const CellGenotype* cell, ad::ParamStore& store, Rng& rng) {
  if (from >= to || to >= g.nodes()) throw ValidationError("invalid global edge");
  GlobalEdge e;
  e.from_ = from;
  e.to_ = to;
  e.op_ = op;
  e.reductions_ = g.level(to) - g.level(from);
  const std::string prefix = edge_prefix(from, to);
  if (op == ops::GlobalOpKind::SkipConnect) {
    e.skip_chain_ = reduce_chain(e.reductions_, g.channels(from), store, prefix + ".skip", rng);
  } else if (op == ops::GlobalOpKind::Cell) {
    if (cell == nullptr) throw ValidationError("cell edge " + prefix + " has no cell architecture");
    if (e.reductions_ > 1) {
      e.prefix_ = reduce_chain(e.reductions_ - 1, g.channels(from), store, prefix + ".prefix", rng);
    }
    e.cell_.emplace(make_cell(g, from, e.reductions_, cell, store, prefix, rng));
  }
  return e;
}

Tensor GlobalEdge::skip(const Tensor& x, const ops::ForwardContext& ctx) const {
  Tensor h = x;
  for (const auto& r : skip_chain_) h = r.forward(h, ctx);
  return h;
}

Tensor GlobalEdge::cell_forward(const Tensor& x, const Tensor& alpha, const ops::ForwardContext& ctx) const {
  if (!cell_) throw StateError("global edge " + edge_prefix(from_, to_) + " carries no cell");
  Tensor h = x;
  for (const auto& r : prefix_) h = r.forward(h, ctx);
  return cell_->forward(h, alpha, ctx);
}

Tensor GlobalEdge::forward(const Tensor& x, const ops::ForwardContext& ctx) const {
  switch (op_) {
    case ops::GlobalOpKind::None:
      return Tensor();
    case ops::GlobalOpKind::SkipConnect:
      return skip(x, ctx);
    case ops::GlobalOpKind::Cell:
      return cell_forward(x, Tensor(), ctx);
  }
  return Tensor();
}

}  // namespace emdarts::nas
