#include "emdarts/search/train.hpp"

#include <cmath>

#include "emdarts/autodiff/functional.hpp"
#include "emdarts/autodiff/optimizer.hpp"
#include "emdarts/autodiff/tape.hpp"
#include "emdarts/error.hpp"

namespace emdarts::search {

namespace {

std::size_t correct_count(const ad::Tensor& logits, std::span<const int> labels) {
  const std::size_t k = logits.dim(1);
  const auto v = logits.values();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (v[i * k + c] > v[i * k + best]) best = c;
    }
    correct += static_cast<int>(best) == labels[i];
  }
  return correct;
}

}  // namespace

LossAccuracy evaluate(const nas::Model& model, const data::Dataset& d, std::size_t batch_size) {
  data::Batcher batcher(d, batch_size, data::SplitTag::Validation, 0);
  ops::ForwardContext ctx;
  ctx.mode = ops::Mode::Eval;
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& batch : batcher.sequential()) {
    const ad::Tensor logits = model.forward(batch.x, ctx).logits;
    loss += ad::cross_entropy(logits, batch.labels).item() * static_cast<double>(batch.size());
    correct += correct_count(logits, batch.labels);
  }
  const double n = static_cast<double>(d.size());
  if (!std::isfinite(loss)) throw NumericalError("non-finite loss during evaluation");
  return {loss / n, static_cast<double>(correct) / n};
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train batch size must be positive");
  if (!(lr_max >= 0.0) || !(lr_min >= 0.0)) throw ConfigError("learning rates must be nonnegative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be nonnegative");
  if (!(grad_clip > 0.0)) throw ConfigError("grad_clip must be positive");
  if (!(drop_path_prob >= 0.0 && drop_path_prob < 1.0)) throw ConfigError("drop_path_prob must be in [0, 1)");
}

std::vector<TrainEpoch> train_network(nas::Network& net, const data::Dataset& train, const TrainConfig& cfg,
                                      const TrainCallback& on_epoch) {
  cfg.validate();
  std::vector<TrainEpoch> history;
  if (cfg.epochs == 0) return history;
  const auto params = net.weights().parameters();
  ad::OptimizerConfig oc;
  oc.kind = ad::OptimizerKind::MomentumSgd;
  oc.learning_rate = cfg.lr_max;
  oc.momentum = cfg.momentum;
  oc.weight_decay = cfg.weight_decay;
  ad::Optimizer opt(oc, params);
  data::Batcher batcher(train, cfg.batch_size, data::SplitTag::Train, derive_seed(cfg.seed, "train.batching"));
  const int total = static_cast<int>(cfg.epochs);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    TrainEpoch m;
    m.epoch = e;
    m.lr = ad::cosine_learning_rate(cfg.lr_max, cfg.lr_min, static_cast<int>(e), total);
    m.drop_path_prob = cfg.drop_path_prob * static_cast<double>(e) / static_cast<double>(cfg.epochs);
    opt.set_learning_rate(m.lr);
    Rng drop_rng(derive_seed(cfg.seed, "dropout", e));
    ops::ForwardContext ctx;
    ctx.mode = ops::Mode::Train;
    ctx.drop_path_prob = m.drop_path_prob;
    ctx.drop_path_rng = &drop_rng;
    double loss_sum = 0.0;
    std::size_t correct = 0, seen = 0;
    for (const auto& batch : batcher.epoch(e)) {
      if (batch.tag != data::SplitTag::Train) throw StateError("weight step given a non-training batch");
      opt.zero_grad();
      ad::Tape tape;
      double loss_value = 0.0;
      {
        ad::TapeScope scope(tape);
        const ad::Tensor logits = net.forward(batch.x, ctx).logits;
        const ad::Tensor loss = ad::cross_entropy(logits, batch.labels);
        loss_value = loss.item();
        correct += correct_count(logits, batch.labels);
        tape.backward(loss);
      }
      if (!std::isfinite(loss_value)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(e));
      }
      ad::check_finite_grads(params, "training epoch " + std::to_string(e));
      ad::clip_grad_norm(params, cfg.grad_clip);
      opt.step();
      loss_sum += loss_value * static_cast<double>(batch.size());
      seen += batch.size();
    }
    m.train_loss = loss_sum / static_cast<double>(seen);
    m.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    history.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return history;
}

TrainResult train_final(const nas::Genotype& genotype, const data::Dataset& train, const TrainConfig& cfg,
                        const TrainCallback& on_epoch) {
  nas::Network net(genotype, train.num_subjects(), cfg.seed);
  auto history = train_network(net, train, cfg, on_epoch);
  return {std::move(net), std::move(history)};
}

}  // namespace emdarts::search
