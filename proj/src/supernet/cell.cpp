#include "emdarts/supernet/cell.hpp"

#include "emdarts/autodiff/functional.hpp"
#include "emdarts/error.hpp"
#include "emdarts/ops/mixed.hpp"
#include "emdarts/supernet/geometry.hpp"

namespace emdarts::nas {

namespace {

std::string local_prefix(const std::string& prefix, std::size_t from, std::size_t to) {
  return prefix + ".e" + std::to_string(from) + "_" + std::to_string(to);
}

Tensor make_projection(const CellSpec& spec, ad::ParamStore& store, const std::string& prefix, Rng& rng) {
  const std::size_t c = spec.out_channels();
  const std::size_t fan_in = spec.cell_nodes * c;
  return store.add_parameter(prefix + ".proj", ops::he_normal({c, fan_in, 1}, fan_in, rng));
}

}  // namespace

Cell Cell::create_search(const CellSpec& spec, ad::ParamStore& store, const std::string& prefix, Rng& rng) {
  Cell cell;
  cell.spec_ = spec;
  cell.search_ = true;
  for (std::size_t to = 2; to < spec.cell_nodes + 2; ++to) {
    for (std::size_t from = 0; from < to; ++from) {
      Edge edge{from, to, {}};
      const bool from_input = from < 2;
      const std::size_t channels = from_input ? spec.in_channels : spec.out_channels();
      const std::size_t stride = from_input ? spec.stride : 1;
      for (ops::LocalOpKind kind : ops::kAllLocalOps) {
        edge.ops.push_back(ops::OpInstance::create(kind, channels, stride, store,
                                                   local_prefix(prefix, from, to) + "." +
                                                       std::string(ops::op_name(kind)),
                                                   rng));
      }
      cell.edges_.push_back(std::move(edge));
    }
  }
  cell.projection_ = make_projection(spec, store, prefix, rng);
  return cell;
}

Cell Cell::create_discrete(const CellSpec& spec, std::span<const LocalEdgeChoice> edges, ad::ParamStore& store,
                           const std::string& prefix, Rng& rng) {
  Cell cell;
  cell.spec_ = spec;
  cell.search_ = false;
  for (const auto& choice : edges) {
    if (choice.to < 2 || choice.to >= spec.cell_nodes + 2 || choice.from >= choice.to) {
      throw ValidationError("invalid local edge in cell " + prefix);
    }
    const bool from_input = choice.from < 2;
    const std::size_t channels = from_input ? spec.in_channels : spec.out_channels();
    const std::size_t stride = from_input ? spec.stride : 1;
    Edge edge{choice.from, choice.to, {}};
    edge.ops.push_back(ops::OpInstance::create(
        choice.op, channels, stride, store,
        local_prefix(prefix, choice.from, choice.to) + "." + std::string(ops::op_name(choice.op)), rng));
    cell.edges_.push_back(std::move(edge));
  }
  cell.projection_ = make_projection(spec, store, prefix, rng);
  return cell;
}

Tensor Cell::drop_path(const Tensor& y, const ops::ForwardContext& ctx) const {
  if (!ctx.training() || ctx.drop_path_prob <= 0.0 || ctx.drop_path_rng == nullptr) return y;
  const double keep = 1.0 - ctx.drop_path_prob;
  std::vector<double> factors(y.dim(0));
  for (double& f : factors) f = ctx.drop_path_rng->uniform() < keep ? 1.0 / keep : 0.0;
  return ad::scale_samples(y, factors);
}

Tensor Cell::features(const Tensor& x, const Tensor& alpha, const ops::ForwardContext& ctx) const {
  if (x.rank() != 3 || x.dim(1) != spec_.in_channels) {
    throw DimensionError("cell expects " + std::to_string(spec_.in_channels) + " channels, got shape " +
                         ad::shape_string(x.shape()));
  }
  Tensor weights;
  if (search_) {
    const ad::Shape expected{edges_.size(), ops::kNumLocalOps};
    if (!alpha.defined() || alpha.shape() != expected) {
      throw DimensionError("search cell needs alpha of shape " + ad::shape_string(expected));
    }
    weights = ad::softmax(alpha, 1);
  }
  const std::size_t n = x.dim(0);
  const std::size_t t_out = spec_.stride == 2 ? (x.dim(2) + 1) / 2 : x.dim(2);
  std::vector<Tensor> nodes{x, x};
  std::vector<std::vector<Tensor>> incoming(spec_.cell_nodes + 2);
  std::size_t e = 0;
  for (std::size_t to = 2; to < spec_.cell_nodes + 2; ++to) {
    for (; e < edges_.size() && edges_[e].to == to; ++e) {
      const Edge& edge = edges_[e];
      Tensor y;
      if (search_) {
        y = ops::mix_candidates(ad::select_row(weights, e), edge.ops, nodes[edge.from], ctx);
      } else {
        const ops::OpInstance& op = edge.ops.front();
        y = op.apply_sparse(nodes[edge.from], ctx);
        if (y.defined() && op.kind() != ops::LocalOpKind::SkipConnect) y = drop_path(y, ctx);
      }
      if (y.defined()) incoming[to].push_back(y);
    }
    nodes.push_back(incoming[to].empty() ? ad::zeros({n, spec_.out_channels(), t_out}) : ad::add_n(incoming[to]));
  }
  return ad::concat_channels(std::span<const Tensor>(nodes).subspan(2));
}

Tensor Cell::forward(const Tensor& x, const Tensor& alpha, const ops::ForwardContext& ctx) const {
  return ad::conv1d(features(x, alpha, ctx), projection_, ad::Conv1dOptions{});
}

}  // namespace emdarts::nas
