#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "emdarts/autodiff/functional.hpp"
#include "emdarts/autodiff/tape.hpp"
#include "emdarts/error.hpp"
#include "emdarts/search/checkpoint.hpp"
#include "emdarts/search/search.hpp"
#include "emdarts/search/train.hpp"
#include "support/fixtures.hpp"
#include "support/genotypes.hpp"
#include "support/gradcheck.hpp"

namespace ad = emdarts::ad;
namespace data = emdarts::data;
namespace nas = emdarts::nas;
namespace ops = emdarts::ops;
namespace search = emdarts::search;
using emdarts::Rng;
using emdarts::testing::relative_error;
using emdarts::testing::synthetic_splits;
using emdarts::testing::tiny_supernet;

namespace {

const emdarts::testing::Splits& splits() {
  static const auto s = synthetic_splits(4, 2, 8, 20, 3);
  return s;
}

data::Batch first_batch(const data::Dataset& d, std::size_t n, data::SplitTag tag) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < std::min(n, d.size()); ++i) idx.push_back(i);
  return data::make_batch(d, idx, tag);
}

search::SearchConfig tiny_search(std::uint64_t seed = 1) {
  search::SearchConfig c;
  c.epochs = 2;
  c.train_batch = 8;
  c.val_batch = 16;
  c.seed = seed;
  return c;
}

std::vector<std::vector<double>> values_of(const std::vector<ad::NamedTensor>& ps) {
  std::vector<std::vector<double>> out;
  for (const auto& p : ps) out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

// L_val in the mode the arch step uses: batch statistics, running stats frozen.
double val_loss(const search::SearchState& s, const data::Batch& b) {
  ops::ForwardContext ctx;
  ctx.update_running_stats = false;
  return ad::cross_entropy(s.net.forward(b.x, ctx).logits, b.labels).item();
}

double perturbed_loss(const search::SearchState& s, const data::Batch& b, ad::Tensor t, std::size_t k, double h) {
  const double keep = t[k];
  t.mutable_values()[k] = keep + h;
  const double l = val_loss(s, b);
  t.mutable_values()[k] = keep;
  return l;
}

}  // namespace

TEST(ArchStep, ZeroInputGivesZeroArchitectureGradient) {
  search::SearchState s(tiny_supernet(4, 4, 2), tiny_search());
  auto b = first_batch(splits().val, 6, data::SplitTag::Validation);
  b.x = ad::Tensor(b.x.shape(), 0.0);
  search::compute_arch_gradients(s, b);
  for (const auto& p : s.net.arch_parameters()) {
    for (double g : p.tensor.grad()) EXPECT_EQ(g, 0.0) << p.name;
  }
  search::update_beta(s, b);
  for (double v : s.net.beta().values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(ArchStep, FirstOrderGradientMatchesFiniteDifferences) {
  search::SearchState s(tiny_supernet(4, 3, 1), tiny_search());
  Rng rng(4);
  for (auto p : s.net.arch_parameters())
    for (double& v : p.tensor.mutable_values()) v = rng.normal();
  const auto b = first_batch(splits().val, 8, data::SplitTag::Validation);
  const double loss = search::compute_arch_gradients(s, b);
  EXPECT_NEAR(loss, val_loss(s, b), 1e-12);
  for (const auto& p : s.net.weights().parameters()) EXPECT_FALSE(p.tensor.has_grad()) << p.name;
  const double h = 1e-5;
  double worst_alpha = 0, worst_beta = 0;
  for (const auto& p : s.net.arch_parameters()) {
    for (std::size_t k = 0; k < p.tensor.numel(); k += 3) {
      const double fd = (perturbed_loss(s, b, p.tensor, k, h) - perturbed_loss(s, b, p.tensor, k, -h)) / (2 * h);
      const double err = relative_error(p.tensor.grad()[k], fd, 1e-6);
      (p.name == "beta" ? worst_beta : worst_alpha) = std::max(p.name == "beta" ? worst_beta : worst_alpha, err);
    }
  }
  EXPECT_LE(worst_alpha, 1e-4);
  EXPECT_LE(worst_beta, 1e-3);
}

// Unrolled objective F(a) = L_val(w - xi (dL_train/dw + wd w), a) by finite differences.
TEST(ArchStep, SecondOrderMatchesUnrolledObjective) {
  auto cfg = tiny_search();
  cfg.second_order = true;
  cfg.w_lr_max = 0.5;
  cfg.w_weight_decay = 0.01;
  search::SearchState s(tiny_supernet(4, 3, 1), cfg);
  const auto val = first_batch(splits().val, 8, data::SplitTag::Validation);
  const auto train = first_batch(splits().train, 8, data::SplitTag::Train);
  search::compute_arch_gradients(s, val, &train);
  const auto second = values_of([&] {
    std::vector<ad::NamedTensor> g;
    for (const auto& p : s.net.arch_parameters()) g.push_back({p.name, ad::Tensor(p.tensor.shape(), std::vector<double>(p.tensor.grad().begin(), p.tensor.grad().end()))});
    return g;
  }());
  auto first_cfg = cfg;
  first_cfg.second_order = false;
  search::SearchState plain(tiny_supernet(4, 3, 1), first_cfg);
  search::compute_arch_gradients(plain, val);

  const double xi = cfg.w_lr_max;
  const auto weights = s.net.weights().parameters();
  auto unrolled = [&]() {
    const auto w0 = values_of(weights);
    for (auto p : weights) p.tensor.clear_grad();
    {
      ops::ForwardContext ctx;
      ctx.update_running_stats = false;
      ad::Tape tape;
      ad::TapeScope scope(tape);
      tape.backward(ad::cross_entropy(s.net.forward(train.x, ctx).logits, train.labels));
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
      auto t = weights[i].tensor;
      auto v = t.mutable_values();
      for (std::size_t k = 0; k < v.size(); ++k) v[k] -= xi * ((t.has_grad() ? t.grad()[k] : 0.0) + 0.01 * w0[i][k]);
      t.clear_grad();
    }
    const double l = val_loss(s, val);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      auto v = ad::Tensor(weights[i].tensor).mutable_values();
      std::copy(w0[i].begin(), w0[i].end(), v.begin());
    }
    return l;
  };
  const double h = 1e-4;
  const auto arch = s.net.arch_parameters();
  double max_err = 0, max_correction = 0;
  for (std::size_t i = 0; i < arch.size(); ++i) {
    auto t = arch[i].tensor;
    for (std::size_t k = 0; k < t.numel(); k += 2) {
      const double keep = t[k];
      t.mutable_values()[k] = keep + h;
      const double up = unrolled();
      t.mutable_values()[k] = keep - h;
      const double down = unrolled();
      t.mutable_values()[k] = keep;
      const double fd = (up - down) / (2 * h);
      max_err = std::max(max_err, std::fabs(second[i][k] - fd));
      max_correction = std::max(max_correction, std::fabs(second[i][k] - plain.net.arch_parameters()[i].tensor.grad()[k]));
    }
  }
  EXPECT_GT(max_correction, 0.0);
  EXPECT_LT(max_err, 0.2 * max_correction) << "err " << max_err << " correction " << max_correction;
}

TEST(ArchStep, RepeatedAlphaStepsDecreaseValidationLoss) {
  auto cfg = tiny_search();
  cfg.arch_lr = 1e-2;
  search::SearchState s(tiny_supernet(2, 3, 1), cfg);
  // two classes, one strongly positive and one strongly negative input channel
  data::Dataset d;
  d.subjects = {"a", "b"};
  Rng rng(5);
  for (int i = 0; i < 16; ++i) {
    emdarts::pre::FastSlowWindow w;
    w.length = 12;
    w.subject = d.subjects[i % 2];
    for (std::size_t k = 0; k < 48; ++k) w.data.push_back((i % 2 ? -1.0 : 1.0) + 0.1 * rng.normal());
    d.windows.push_back(w);
    d.labels.push_back(i % 2);
  }
  const auto b = first_batch(d, 16, data::SplitTag::Validation);
  const auto beta_before = values_of(s.net.beta_parameters());
  std::vector<double> losses;
  for (int step = 0; step < 8; ++step) losses.push_back(search::update_alpha(s, b));
  losses.push_back(val_loss(s, b));
  for (std::size_t i = 1; i < losses.size(); ++i) EXPECT_LT(losses[i], losses[i - 1]) << "step " << i;
  EXPECT_EQ(values_of(s.net.beta_parameters()), beta_before);
  EXPECT_EQ(s.alpha_steps, 8u);
  EXPECT_EQ(s.beta_steps, 0u);
}

TEST(ArchStep, NanGradientNamesTheCell) {
  search::SearchState s(tiny_supernet(4, 3, 1), tiny_search());
  auto b = first_batch(splits().val, 4, data::SplitTag::Validation);
  ad::Tensor(s.net.alpha(1)).mutable_values()[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    search::update_alpha(s, b);
    FAIL();
  } catch (const emdarts::NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("alpha.edge_0_2"), std::string::npos) << e.what();
  }
}

TEST(ArchStep, BetaRowsStayDistributions) {
  search::SearchState s(tiny_supernet(4, 3, 1), tiny_search());
  const auto b = first_batch(splits().val, 8, data::SplitTag::Validation);
  for (int step = 0; step < 100; ++step) {
    search::update_beta(s, b);
    const auto w = ad::softmax(s.net.beta(), 1);
    for (std::size_t r = 0; r < w.dim(0); ++r) {
      double sum = 0;
      for (std::size_t c = 0; c < 3; ++c) sum += w[r * 3 + c];
      ASSERT_NEAR(sum, 1.0, 1e-9);
    }
  }
  EXPECT_EQ(s.beta_steps, 100u);
}

TEST(ArchStep, StorageIndependenceBetweenCells) {
  search::SearchState s(tiny_supernet(4, 4, 1), tiny_search());
  const auto before = values_of(s.net.alpha_parameters());
  ad::Tensor(s.net.alpha(0)).mutable_values()[3] += 1.0;
  const auto after = values_of(s.net.alpha_parameters());
  for (std::size_t i = 1; i < before.size(); ++i) EXPECT_EQ(before[i], after[i]);
  EXPECT_NE(before[0], after[0]);
}

TEST(TrainStep, ZeroLearningRateIsFixedPoint) {
  search::SearchState s(tiny_supernet(4, 3, 1), tiny_search());
  s.w_opt.set_learning_rate(0.0);
  const auto before = values_of(s.net.weights().parameters());
  search::train_step(s, first_batch(splits().train, 8, data::SplitTag::Train));
  EXPECT_EQ(values_of(s.net.weights().parameters()), before);
}

TEST(TrainStep, SmallStepDecreasesTrainingLoss) {
  search::SearchState s(tiny_supernet(4, 3, 1), tiny_search());
  s.w_opt.set_learning_rate(1e-3);
  const auto b = first_batch(splits().train, 8, data::SplitTag::Train);
  const auto arch_before = values_of(s.net.arch_parameters());
  const double before = search::train_step(s, b);
  ops::ForwardContext ctx;
  ctx.update_running_stats = false;
  const double after = ad::cross_entropy(s.net.forward(b.x, ctx).logits, b.labels).item();
  EXPECT_LT(after, before);
  EXPECT_EQ(values_of(s.net.arch_parameters()), arch_before);
  for (const auto& p : s.net.arch_parameters()) EXPECT_FALSE(p.tensor.has_grad());
}

TEST(TrainStep, OptimizersPartitionParameters) {
  search::SearchState s(tiny_supernet(4, 3, 1), tiny_search());
  std::set<const ad::TensorNode*> w, a;
  for (const auto& p : s.w_opt.params()) w.insert(p.tensor.id());
  for (const auto& p : s.alpha_opt.params()) a.insert(p.tensor.id());
  for (const auto& p : s.beta_opt.params()) a.insert(p.tensor.id());
  for (const auto* id : a) EXPECT_EQ(w.count(id), 0u);
  EXPECT_EQ(w.size(), s.net.weights().parameters().size());
  EXPECT_EQ(a.size(), s.net.arch_parameters().size());
}

TEST(BatchTags, StepsRejectWrongSplit) {
  search::SearchState s(tiny_supernet(4, 3, 1), tiny_search());
  const auto train = first_batch(splits().train, 4, data::SplitTag::Train);
  const auto val = first_batch(splits().val, 4, data::SplitTag::Validation);
  EXPECT_THROW(search::update_arch(s, train), emdarts::StateError);
  EXPECT_THROW(search::train_step(s, val), emdarts::StateError);
  EXPECT_EQ(s.alpha_steps + s.beta_steps + s.w_steps, 0u);
}

TEST(Search, OneBatchEachMeansOneStepEach) {
  auto cfg = tiny_search();
  cfg.epochs = 1;
  cfg.train_batch = 1000;
  cfg.val_batch = 1000;
  search::SearchState s(tiny_supernet(4, 3, 1), cfg);
  search::run_search(s, splits().train, splits().val);
  EXPECT_EQ(s.alpha_steps, 1u);
  EXPECT_EQ(s.beta_steps, 1u);
  EXPECT_EQ(s.w_steps, 1u);
  EXPECT_EQ(s.history.size(), 1u);
  EXPECT_EQ(s.epoch, 1u);
}

TEST(Search, DeterministicUnderSeed) {
  auto cfg = tiny_search(9);
  const auto a = search::alternate_search(splits().train, splits().val, tiny_supernet(4, 4, 1), cfg);
  const auto b = search::alternate_search(splits().train, splits().val, tiny_supernet(4, 4, 1), cfg);
  EXPECT_EQ(a.genotype.to_text(), b.genotype.to_text());
  ASSERT_EQ(a.state.history.size(), 2u);
  EXPECT_EQ(a.state.history.back().val_loss, b.state.history.back().val_loss);
  EXPECT_EQ(a.state.history.back().train_loss, b.state.history.back().train_loss);
  EXPECT_EQ(a.state.history[1].lr, emdarts::ad::cosine_learning_rate(cfg.w_lr_max, cfg.w_lr_min, 1, 2));
}

TEST(Search, CheckpointResumeMatchesUninterruptedRun) {
  auto cfg = tiny_search(5);
  cfg.epochs = 2;
  search::SearchState full(tiny_supernet(4, 3, 1), cfg);
  search::run_search(full, splits().train, splits().val);

  auto one = cfg;
  search::SearchState first(tiny_supernet(4, 3, 1), cfg);
  std::stringstream ss;
  search::run_search(first, splits().train, splits().val, [&](const search::SearchState& st) {
    if (st.epoch == 1) search::save_checkpoint(st, ss);
  });
  search::SearchState resumed(tiny_supernet(4, 3, 1), cfg);
  search::load_checkpoint(resumed, ss);
  EXPECT_EQ(resumed.epoch, 1u);
  search::run_search(resumed, splits().train, splits().val);
  EXPECT_EQ(resumed.net.discretize(), full.net.discretize());
  EXPECT_EQ(values_of(resumed.net.arch_parameters()), values_of(full.net.arch_parameters()));
  EXPECT_EQ(values_of(resumed.net.weights().parameters()), values_of(full.net.weights().parameters()));
  EXPECT_EQ(resumed.history.back().val_loss, full.history.back().val_loss);
  (void)one;
}

TEST(Search, InvalidConfig) {
  auto cfg = tiny_search();
  cfg.epochs = 0;
  EXPECT_THROW(search::SearchState(tiny_supernet(4), cfg), emdarts::ConfigError);
  cfg = tiny_search();
  cfg.arch_lr = -1;
  EXPECT_THROW(search::SearchState(tiny_supernet(4), cfg), emdarts::ConfigError);
}

TEST(TrainFinal, ZeroEpochsReturnsFreshNetwork) {
  const auto g = emdarts::testing::cell_chain(3, 1, 4, {2});
  search::TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 3;
  auto r = search::train_final(g, splits().train, cfg);
  EXPECT_TRUE(r.history.empty());
  nas::Network fresh(g, splits().train.num_subjects(), 3);
  EXPECT_EQ(values_of(r.network.weights().parameters()), values_of(fresh.weights().parameters()));
}

// Eight synthetic subjects at 100 Hz, 50 epochs of the default schedule.
TEST(TrainFinal, FitsEightSubjectTrainingSet) {
  const auto data = synthetic_splits(8, 3, 20, 100, 1);
  const auto g = emdarts::testing::searched_genotype();
  search::TrainConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 4;
  auto r = search::train_final(g, data.fit, cfg);
  ASSERT_EQ(r.history.size(), 50u);
  EXPECT_EQ(r.history[0].drop_path_prob, 0.0);
  EXPECT_NEAR(r.history[25].drop_path_prob, 0.15, 1e-15);
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
  EXPECT_GE(r.history.back().train_accuracy, 0.95);
}

TEST(TrainFinal, NoDropPathIsDeterministic) {
  const auto g = emdarts::testing::cell_chain(3, 1, 4, {2});
  search::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.drop_path_prob = 0.0;
  auto a = search::train_final(g, splits().train, cfg);
  auto b = search::train_final(g, splits().train, cfg);
  const auto ea = search::evaluate(a.network, splits().val);
  const auto eb = search::evaluate(b.network, splits().val);
  EXPECT_EQ(ea.loss, eb.loss);
  EXPECT_EQ(values_of(a.network.weights().parameters()), values_of(b.network.weights().parameters()));
}
