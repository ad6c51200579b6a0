#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "emdarts/autodiff/functional.hpp"
#include "emdarts/autodiff/tape.hpp"
#include "emdarts/error.hpp"
#include "emdarts/supernet/cell.hpp"
#include "emdarts/supernet/network.hpp"
#include "emdarts/supernet/supernet.hpp"
#include "support/genotypes.hpp"
#include "support/gradcheck.hpp"

namespace ad = emdarts::ad;
namespace nas = emdarts::nas;
namespace ops = emdarts::ops;
using emdarts::Rng;
using emdarts::testing::grad_check;
using emdarts::testing::projected;
using emdarts::testing::random_tensor;

namespace {

nas::SupernetConfig small_config(std::size_t nodes = 4, std::size_t cell_nodes = 2, std::size_t classes = 3) {
  nas::SupernetConfig c;
  c.nodes = nodes;
  c.cell_nodes = cell_nodes;
  c.stem_channels = 4;
  c.num_classes = classes;
  c.reduction_nodes = nas::SupernetConfig::default_reduction_nodes(nodes);
  return c;
}

ops::ForwardContext eval_ctx() {
  ops::ForwardContext c;
  c.mode = ops::Mode::Eval;
  return c;
}

ops::ForwardContext frozen_train() {
  ops::ForwardContext c;
  c.update_running_stats = false;
  return c;
}

void saturate(ad::Tensor t, std::size_t row, std::size_t col, double hi = 40.0) {
  const std::size_t width = t.dim(1);
  auto v = t.mutable_values();
  for (std::size_t k = 0; k < width; ++k) v[row * width + k] = k == col ? hi : -hi;
}

void saturate_all_rows(ad::Tensor t, std::size_t col) {
  for (std::size_t r = 0; r < t.dim(0); ++r) saturate(t, r, col);
}

void randomize_arch(const nas::Supernet& net, Rng& rng) {
  for (auto p : net.arch_parameters())
    for (double& v : p.tensor.mutable_values()) v = rng.normal();
}

std::size_t factorized_reduce_params(std::size_t c_in, std::size_t c_out) { return 2 * (c_out / 2) * c_in + 2 * c_out; }

}  // namespace

TEST(Geometry, EdgeCountsForDefaultDepth) {
  nas::Geometry g(9, 4, 16, nas::SupernetConfig::default_reduction_nodes(9));
  EXPECT_EQ(g.num_global_edges(), 36u);
  EXPECT_EQ(g.num_local_edges(), 14u);
  std::size_t pairs = 0;
  for (std::size_t j = 1; j < 9; ++j) pairs += j;
  EXPECT_EQ(pairs, 36u);
  EXPECT_EQ(nas::SupernetConfig::default_reduction_nodes(9), (std::vector<std::size_t>{3, 6}));
  EXPECT_EQ(g.channels(2), 16u);
  EXPECT_EQ(g.channels(3), 32u);
  EXPECT_EQ(g.channels(8), 64u);
  EXPECT_EQ(g.length(8, 100), 25u);
  EXPECT_EQ(g.length(5, 101), 51u);
}

TEST(Geometry, EdgeIndexingIsDenseAndOrdered) {
  nas::Geometry g(6, 3, 4, {});
  const auto globals = g.global_edges();
  for (std::size_t e = 0; e < globals.size(); ++e) {
    EXPECT_EQ(nas::Geometry::global_edge_index(globals[e].first, globals[e].second), e);
    EXPECT_LT(globals[e].first, globals[e].second);
  }
  const auto locals = g.local_edges();
  ASSERT_EQ(locals.size(), 2u + 3u + 4u);
  for (std::size_t e = 0; e < locals.size(); ++e) {
    EXPECT_EQ(nas::Geometry::local_edge_index(locals[e].first, locals[e].second), e);
    EXPECT_GE(locals[e].second, 2u);
  }
}

TEST(Geometry, InvalidConfigs) {
  EXPECT_THROW(nas::Geometry(2, 1, 4, {}), emdarts::ConfigError);
  EXPECT_THROW(nas::Geometry(5, 0, 4, {}), emdarts::ConfigError);
  EXPECT_THROW(nas::Geometry(5, 1, 4, {1}), emdarts::ConfigError);
  EXPECT_THROW(nas::Geometry(5, 1, 4, {5}), emdarts::ConfigError);
  auto c = small_config();
  c.num_classes = 0;
  EXPECT_THROW(nas::Supernet(c, 1), emdarts::ConfigError);
}

TEST(SupernetInit, NearUniformMixtures) {
  nas::Supernet net(small_config(5, 2), 3);
  const auto beta = ad::softmax(net.beta(), 1);
  for (double p : beta.values()) EXPECT_NEAR(p, 1.0 / 3.0, 1e-3);
  ASSERT_EQ(net.alpha_blocks().size(), net.geometry().num_global_edges());
  for (const auto& block : net.alpha_blocks()) {
    const auto w = ad::softmax(block.tensor, 1);
    for (double p : w.values()) EXPECT_NEAR(p, 1.0 / 8.0, 1e-3);
  }
}

TEST(SupernetInit, SameSeedSameParameters) {
  nas::Supernet a(small_config(), 7), b(small_config(), 7), c(small_config(), 8);
  const auto& pa = a.weights().parameters();
  const auto& pb = b.weights().parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    for (std::size_t k = 0; k < pa[i].tensor.numel(); ++k) EXPECT_EQ(pa[i].tensor[k], pb[i].tensor[k]);
    const auto& pc = c.weights().parameters()[i].tensor;
    for (std::size_t k = 0; k < pc.numel(); ++k) any_diff |= pc[k] != pa[i].tensor[k];
  }
  EXPECT_TRUE(any_diff);
  for (std::size_t k = 0; k < a.beta().numel(); ++k) EXPECT_EQ(a.beta()[k], b.beta()[k]);
}

TEST(SupernetInit, CellsOwnDistinctAlphaStorage) {
  nas::Supernet net(small_config(5, 2), 1);
  std::set<const ad::TensorNode*> ids;
  for (const auto& block : net.alpha_blocks()) ids.insert(block.tensor.id());
  EXPECT_EQ(ids.size(), net.geometry().num_global_edges());
  auto first = net.alpha(0);
  const auto before = net.alpha(1).clone();
  first.mutable_values()[0] = 99.0;
  for (std::size_t k = 0; k < before.numel(); ++k) EXPECT_EQ(net.alpha(1)[k], before[k]);
}

// With skip saturated everywhere the two-node cell computes
// n2 = x + x, n3 = x + x + n2 before the projection.
TEST(Cell, SkipSaturatedMatchesHandDag) {
  Rng rng(1);
  ad::ParamStore store;
  nas::CellSpec spec{3, 1, 2};
  const auto cell = nas::Cell::create_search(spec, store, "c", rng);
  ad::Tensor alpha({5, 8});
  saturate_all_rows(alpha, ops::index_of(ops::LocalOpKind::SkipConnect));
  const auto x = random_tensor({2, 3, 7}, rng);
  const auto features = cell.features(x, alpha, frozen_train());
  ASSERT_EQ(features.shape(), (ad::Shape{2, 6, 7}));
  const auto y = cell.forward(x, alpha, frozen_train());
  const auto& p = cell.projection();
  ASSERT_EQ(p.shape(), (ad::Shape{3, 6, 1}));
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t t = 0; t < 7; ++t)
      for (std::size_t c = 0; c < 3; ++c) {
        const double xv = x[(b * 3 + c) * 7 + t];
        EXPECT_NEAR(features[(b * 6 + c) * 7 + t], 2 * xv, 1e-9);
        EXPECT_NEAR(features[(b * 6 + 3 + c) * 7 + t], 4 * xv, 1e-9);
        double ref = 0;
        for (std::size_t k = 0; k < 3; ++k) {
          const double xk = x[(b * 3 + k) * 7 + t];
          ref += p[c * 6 + k] * 2 * xk + p[c * 6 + 3 + k] * 4 * xk;
        }
        EXPECT_NEAR(y[(b * 3 + c) * 7 + t], ref, 1e-9);
      }
}

TEST(Cell, NoneSaturatedGivesZeroFeatures) {
  Rng rng(2);
  ad::ParamStore store;
  const auto cell = nas::Cell::create_search({3, 1, 3}, store, "c", rng);
  ad::Tensor alpha({9, 8});
  saturate_all_rows(alpha, 0);
  const auto f = cell.features(random_tensor({2, 3, 6}, rng), alpha, frozen_train());
  for (double v : f.values()) EXPECT_NEAR(v, 0.0, 1e-20);
}

TEST(Cell, ReductionCellHalvesAndDoubles) {
  Rng rng(3);
  ad::ParamStore store;
  const auto cell = nas::Cell::create_search({4, 2, 2}, store, "c", rng);
  ad::Tensor alpha({5, 8});
  const auto y = cell.forward(random_tensor({2, 4, 9}, rng), alpha, frozen_train());
  EXPECT_EQ(y.shape(), (ad::Shape{2, 8, 5}));
}

TEST(Cell, AlphaGradientMatchesFiniteDifferences) {
  Rng rng(4);
  ad::ParamStore store;
  const auto cell = nas::Cell::create_search({2, 1, 2}, store, "c", rng);
  auto alpha = random_tensor({5, 8}, rng, 0.5);
  const auto x = random_tensor({2, 2, 6}, rng);
  const auto r = random_tensor({2, 2, 6}, rng);
  auto res = grad_check([&] { return projected(cell.forward(x, alpha, frozen_train()), r); }, {alpha});
  EXPECT_LE(res.max_rel_error, 1e-4) << res.worst;
  EXPECT_EQ(res.checked, 40u);
}

TEST(SupernetForward, OutputShapeForSeveralConfigs) {
  Rng rng(5);
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{3, 1}, {4, 2}, {5, 1}, {6, 2}}) {
    nas::Supernet net(small_config(m, n, 5), 1);
    const auto out = net.forward(random_tensor({2, 4, 20}, rng), eval_ctx());
    EXPECT_EQ(out.logits.shape(), (ad::Shape{2, 5}));
    EXPECT_EQ(out.nodes.size(), m);
    EXPECT_EQ(out.embedding.dim(1), net.geometry().channels(m - 1));
  }
  nas::Supernet net(small_config(), 1);
  EXPECT_THROW(net.forward(ad::Tensor({2, 3, 20}), eval_ctx()), emdarts::DimensionError);
}

TEST(SupernetForward, ZeroBatchGivesEqualLogits) {
  nas::Supernet net(small_config(5, 2), 2);
  for (const auto& ctx : {eval_ctx(), frozen_train()}) {
    const auto logits = net.forward(ad::Tensor({3, 4, 16}), ctx).logits;
    for (std::size_t b = 1; b < 3; ++b)
      for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(logits[b * 3 + k], logits[k]);
  }
}

// Skip-saturated chain equals a discrete skip-chain network holding the same weights.
TEST(SupernetForward, SkipChainMatchesDiscreteNetwork) {
  auto cfg = small_config(5, 2);
  nas::Supernet net(cfg, 3);
  const auto& g = net.geometry();
  for (auto [i, j] : g.global_edges()) {
    saturate(net.beta(), nas::Geometry::global_edge_index(i, j), i + 1 == j ? 1 : 0);
  }
  nas::Network chain(emdarts::testing::skip_chain(5, 2, 4, cfg.reduction_nodes), 3, 99);
  EXPECT_EQ(chain.weights().copy_matching_from(net.weights()), chain.weights().parameters().size() + chain.weights().buffers().size());
  Rng rng(6);
  const auto x = random_tensor({2, 4, 16}, rng);
  const auto a = net.forward(x, eval_ctx()).logits;
  const auto b = chain.forward(x, eval_ctx()).logits;
  for (std::size_t k = 0; k < a.numel(); ++k) {
    EXPECT_TRUE(std::isfinite(a[k]));
    EXPECT_NEAR(a[k], b[k], 1e-9);
  }
}

TEST(SupernetForward, BackwardReachesEveryLeaf) {
  nas::Supernet net(small_config(4, 2), 4);
  Rng rng(7);
  const auto x = random_tensor({2, 4, 64}, rng);
  const int labels[] = {0, 2};
  ad::Tape tape;
  {
    ad::TapeScope scope(tape);
    tape.backward(ad::cross_entropy(net.forward(x, {}).logits, labels));
  }
  for (const auto& p : net.weights().parameters()) {
    ASSERT_TRUE(p.tensor.has_grad()) << p.name;
    for (double v : p.tensor.grad()) ASSERT_TRUE(std::isfinite(v)) << p.name;
  }
  for (const auto& p : net.arch_parameters()) {
    ASSERT_TRUE(p.tensor.has_grad()) << p.name;
    double norm = 0;
    for (double v : p.tensor.grad()) norm += v * v;
    EXPECT_GT(norm, 0.0) << p.name;
  }
}

TEST(SupernetForward, BetaGradientMatchesFiniteDifferences) {
  nas::Supernet net(small_config(3, 1), 5);
  Rng rng(8);
  const auto x = random_tensor({2, 4, 8}, rng);
  const int labels[] = {1, 0};
  auto beta = net.beta();
  auto res = grad_check([&] { return ad::cross_entropy(net.forward(x, eval_ctx()).logits, labels); }, {beta});
  EXPECT_LE(res.max_rel_error, 1e-4) << res.worst;
}

// All cells with identical alpha equal the two-block weight-shared supernet.
TEST(SupernetForward, EqualAlphasMatchSharedAlphaSupernet) {
  auto cfg = small_config(5, 2);
  nas::Supernet per_cell(cfg, 9, nas::AlphaSharing::PerCell);
  nas::Supernet shared(cfg, 9, nas::AlphaSharing::Shared);
  ASSERT_EQ(shared.alpha_blocks().size(), 2u);
  Rng rng(9);
  const auto common = random_tensor({5, 8}, rng);
  auto fill = [&](ad::Tensor t) {
    auto v = t.mutable_values();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = common[k];
  };
  for (const auto& b : per_cell.alpha_blocks()) fill(b.tensor);
  for (const auto& b : shared.alpha_blocks()) fill(b.tensor);
  for (auto net : {&per_cell, &shared}) saturate_all_rows(net->beta(), 2);
  const auto x = random_tensor({2, 4, 16}, rng);
  const auto a = per_cell.forward(x, eval_ctx()).logits;
  const auto b = shared.forward(x, eval_ctx()).logits;
  for (std::size_t k = 0; k < a.numel(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(Discretize, ArgmaxAndTieBreaks) {
  nas::Geometry g(3, 2, 4, {2});
  ad::Tensor beta({3, 3});
  auto bv = beta.mutable_values();
  const double rows[3][3] = {{0.1, 0.9, 0.0}, {0.0, 0.0, 0.0}, {0.0, 0.1, 0.5}};
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) bv[r * 3 + c] = rows[r][c];
  std::vector<ad::Tensor> alphas(3, ad::Tensor({5, 8}, 0.0));
  const auto geno = nas::discretize(g, alphas, beta);
  EXPECT_EQ(geno.global_op(0, 1), ops::GlobalOpKind::SkipConnect);
  EXPECT_EQ(geno.global_op(0, 2), ops::GlobalOpKind::None);  // tie goes to the lowest index
  EXPECT_EQ(geno.global_op(1, 2), ops::GlobalOpKind::Cell);
  const auto* cell = geno.cell(1, 2);
  ASSERT_NE(cell, nullptr);
  const std::vector<nas::LocalEdgeChoice> expected = {
      {0, 2, ops::LocalOpKind::SkipConnect}, {1, 2, ops::LocalOpKind::SkipConnect},
      {0, 3, ops::LocalOpKind::SkipConnect}, {1, 3, ops::LocalOpKind::SkipConnect}};
  EXPECT_EQ(cell->edges, expected);
}

TEST(Discretize, KeepsTopTwoIncomingEdges) {
  nas::Geometry g(3, 2, 4, {});
  ad::Tensor beta({3, 3}, 0.0);
  for (std::size_t r = 0; r < 3; ++r) beta.mutable_values()[r * 3 + 2] = 1.0;
  std::vector<ad::Tensor> alphas;
  for (int k = 0; k < 3; ++k) alphas.emplace_back(ad::Shape{5, 8}, 0.0);
  auto a = alphas[0].mutable_values();
  // node 3: edges from 0, 1, 2 (local rows 2, 3, 4); prefer 2 then 0.
  a[4 * 8 + 5] = 3.0;  // 2 -> 3 sep_conv_5
  a[2 * 8 + 7] = 2.0;  // 0 -> 3 dil_conv_5
  a[3 * 8 + 0] = 9.0;  // 1 -> 3 none only: best non-none weight is small
  const auto geno = nas::discretize(g, alphas, beta);
  const auto* cell = geno.cell(0, 1);
  ASSERT_NE(cell, nullptr);
  ASSERT_EQ(cell->edges.size(), 4u);
  EXPECT_EQ(cell->edges[2], (nas::LocalEdgeChoice{0, 3, ops::LocalOpKind::DilConv5}));
  EXPECT_EQ(cell->edges[3], (nas::LocalEdgeChoice{2, 3, ops::LocalOpKind::SepConv5}));
}

// Encode a genotype as saturated logits and discretize again.
TEST(Discretize, IdempotentThroughSaturatedEncoding) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    nas::Supernet net(small_config(5, 3), seed);
    Rng rng(seed + 100);
    randomize_arch(net, rng);
    const auto first = net.discretize();
    first.validate();
    const auto& g = net.geometry();
    ad::Tensor beta({g.num_global_edges(), 3});
    std::vector<ad::Tensor> alphas;
    for (const auto& e : first.global_edges) {
      const std::size_t idx = nas::Geometry::global_edge_index(e.from, e.to);
      saturate(beta, idx, ops::index_of(e.op), 10.0);
      ad::Tensor alpha({g.num_local_edges(), 8}, 0.0);
      if (const auto* c = first.cell(e.from, e.to)) {
        for (const auto& le : c->edges) alpha.mutable_values()[nas::Geometry::local_edge_index(le.from, le.to) * 8 + ops::index_of(le.op)] = 10.0;
      }
      alphas.push_back(alpha);
    }
    EXPECT_EQ(nas::discretize(g, alphas, beta), first);
  }
}

TEST(Genotype, TextRoundTripIsByteExact) {
  nas::Supernet net(small_config(6, 2), 11);
  Rng rng(11);
  randomize_arch(net, rng);
  const auto g = net.discretize();
  const std::string text = g.to_text();
  EXPECT_EQ(text.rfind("emdarts-genotype v1\n", 0), 0u);
  const auto parsed = nas::Genotype::parse(text);
  EXPECT_EQ(parsed, g);
  EXPECT_EQ(parsed.to_text(), text);
}

TEST(Genotype, ValidationAndFormatErrors) {
  auto g = emdarts::testing::skip_chain(4, 2, 4, {2});
  g.validate();
  auto cyclic = g;
  cyclic.global_edges[0] = {1, 0, ops::GlobalOpKind::SkipConnect};
  EXPECT_THROW(cyclic.validate(), emdarts::ValidationError);
  auto missing = g;
  missing.global_edges.pop_back();
  EXPECT_THROW(missing.validate(), emdarts::ValidationError);
  auto cell = emdarts::testing::cell_chain(4, 2, 4, {2});
  cell.validate();
  auto three_inputs = cell;
  three_inputs.cells[0].edges.push_back({2, 3, ops::LocalOpKind::MaxPool3});
  EXPECT_THROW(three_inputs.validate(), emdarts::ValidationError);
  auto none_op = cell;
  none_op.cells[0].edges[0].op = ops::LocalOpKind::None;
  EXPECT_THROW(none_op.validate(), emdarts::ValidationError);
  EXPECT_THROW(nas::Network(cyclic, 2, 1), emdarts::ValidationError);
  EXPECT_THROW(nas::Genotype::parse("emdarts-genotype v2\n"), emdarts::FormatError);
  EXPECT_THROW(nas::Genotype::parse(g.to_text() + "global 0 1 conv_9\n"), emdarts::FormatError);
}

TEST(Network, AllSkipCountsOnlyStemHeadAndReductions) {
  const std::size_t c = 4, k = 3;
  auto all_skip = [](std::size_t, std::size_t) { return ops::GlobalOpKind::SkipConnect; };
  nas::Network plain(emdarts::testing::make_genotype(5, 2, c, {}, all_skip), k, 1);
  const std::size_t stem = 4 * c * 3 + 2 * c;
  EXPECT_EQ(plain.parameter_count(), stem + c * k + k);

  const std::vector<std::size_t> reds = {2, 4};
  nas::Network reduced(emdarts::testing::make_genotype(5, 2, c, reds, all_skip), k, 1);
  auto level = [&](std::size_t n) { return static_cast<std::size_t>(std::count_if(reds.begin(), reds.end(), [&](std::size_t r) { return r <= n; })); };
  std::size_t fr = 0;
  for (std::size_t j = 1; j < 5; ++j)
    for (std::size_t i = 0; i < j; ++i)
      for (std::size_t l = level(i); l < level(j); ++l) fr += factorized_reduce_params(c << l, c << (l + 1));
  EXPECT_EQ(reduced.parameter_count(), stem + fr + (c << 2) * k + k);
}

TEST(Network, SearchedGenotypeIsSmallerThanSupernet) {
  nas::Supernet net(small_config(5, 2), 12);
  Rng rng(12);
  randomize_arch(net, rng);
  const auto g = net.discretize();
  nas::Network discrete(g, 3, 1);
  EXPECT_LT(discrete.parameter_count(), net.weight_count());
  nas::Network reparsed(nas::Genotype::parse(g.to_text()), 3, 2);
  EXPECT_EQ(reparsed.parameter_count(), discrete.parameter_count());
}

TEST(Network, DeadNodeBecomesZeros) {
  // node 2 has no live inputs; node 3 reads only node 2 and node 0
  auto g = emdarts::testing::make_genotype(4, 1, 4, {}, [](std::size_t i, std::size_t j) {
    if (j == 1) return ops::GlobalOpKind::SkipConnect;
    if (j == 3 && i == 2) return ops::GlobalOpKind::SkipConnect;
    return ops::GlobalOpKind::None;
  });
  nas::Network net(g, 2, 1);
  Rng rng(13);
  const auto out = net.forward(random_tensor({2, 4, 10}, rng), eval_ctx());
  for (double v : out.nodes[2].values()) EXPECT_EQ(v, 0.0);
  for (double v : out.embedding.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(out.logits[0], out.logits[2]);
}

TEST(Network, SaveLoadReproducesLogits) {
  auto g = emdarts::testing::make_genotype(5, 2, 4, {2, 4}, [](std::size_t i, std::size_t j) {
    return (i + j) % 3 == 0 ? ops::GlobalOpKind::None : (i + j) % 3 == 1 ? ops::GlobalOpKind::Cell : ops::GlobalOpKind::SkipConnect;
  }, ops::LocalOpKind::DilConv3);
  nas::Network net(g, 3, 21);
  Rng rng(14);
  const auto x = random_tensor({2, 4, 16}, rng);
  net.forward(x, {});  // move the running statistics off their defaults
  std::stringstream ss;
  net.save(ss);
  const auto loaded = nas::Network::load(ss);
  EXPECT_EQ(loaded.genotype(), net.genotype());
  const auto a = net.forward(x, eval_ctx()).logits;
  const auto b = loaded.forward(x, eval_ctx()).logits;
  for (std::size_t k = 0; k < a.numel(); ++k) EXPECT_EQ(a[k], b[k]);
  std::stringstream bad("emdarts-weights v0\n");
  EXPECT_THROW(nas::Network::load(bad), emdarts::FormatError);
  EXPECT_THROW(nas::Network::load_file("/nonexistent/w.txt"), emdarts::InputError);
}

TEST(Network, DropPathOnlyInTraining) {
  auto g = emdarts::testing::cell_chain(3, 2, 4, {}, ops::LocalOpKind::SepConv3);
  nas::Network net(g, 2, 1);
  Rng rng(15);
  const auto x = random_tensor({4, 4, 12}, rng);
  Rng drop(1);
  ops::ForwardContext ctx = eval_ctx();
  ctx.drop_path_prob = 0.9;
  ctx.drop_path_rng = &drop;
  const auto a = net.forward(x, ctx).logits;
  const auto b = net.forward(x, eval_ctx()).logits;
  for (std::size_t k = 0; k < a.numel(); ++k) EXPECT_EQ(a[k], b[k]);
  ops::ForwardContext train = frozen_train();
  train.drop_path_prob = 0.9;
  train.drop_path_rng = &drop;
  const auto c = net.forward(x, train).logits;
  const auto d = net.forward(x, frozen_train()).logits;
  bool differs = false;
  for (std::size_t k = 0; k < c.numel(); ++k) differs |= c[k] != d[k];
  EXPECT_TRUE(differs);
}
