#include "emdarts/search/search.hpp"

#include <algorithm>
#include <cmath>

#include "emdarts/autodiff/functional.hpp"
#include "emdarts/autodiff/tape.hpp"
#include "emdarts/error.hpp"
#include "emdarts/search/train.hpp"

namespace emdarts::search {

namespace {

ad::OptimizerConfig weight_optimizer(const SearchConfig& cfg) {
  ad::OptimizerConfig oc;
  oc.kind = ad::OptimizerKind::MomentumSgd;
  oc.learning_rate = cfg.w_lr_max;
  oc.momentum = cfg.w_momentum;
  oc.weight_decay = cfg.w_weight_decay;
  return oc;
}

ad::OptimizerConfig arch_optimizer(const SearchConfig& cfg) {
  ad::OptimizerConfig oc;
  oc.kind = ad::OptimizerKind::Adam;
  oc.learning_rate = cfg.arch_lr;
  oc.weight_decay = cfg.arch_weight_decay;
  return oc;
}

void clear_grads(const std::vector<ad::NamedTensor>& params) {
  for (auto p : params) p.tensor.clear_grad();
}

void require_tag(const data::Batch& b, data::SplitTag tag, const char* who) {
  if (b.tag != tag) {
    throw StateError(std::string(who) + " expects a " + data::split_tag_name(tag) + " batch, got " +
                     data::split_tag_name(b.tag));
  }
}

// Loss of one batch with gradients left on every requires_grad leaf.
double loss_and_grads(const SearchState& s, const data::Batch& b, bool update_stats) {
  ops::ForwardContext ctx;
  ctx.mode = ops::Mode::Train;
  ctx.update_running_stats = update_stats;
  ad::Tape tape;
  ad::TapeScope scope(tape);
  const ad::Tensor loss = ad::cross_entropy(s.net.forward(b.x, ctx).logits, b.labels);
  const double value = loss.item();
  tape.backward(loss);
  if (!std::isfinite(value)) {
    std::string culprit;
    for (const auto& p : s.all_parameters()) {
      const auto v = p.tensor.values();
      if (std::any_of(v.begin(), v.end(), [](double x) { return !std::isfinite(x); })) {
        culprit = "; parameter " + p.name + " is non-finite";
        break;
      }
    }
    throw NumericalError("non-finite loss" + culprit);
  }
  return value;
}

std::vector<std::vector<double>> copy_grads(const std::vector<ad::NamedTensor>& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params) {
    if (p.tensor.has_grad()) {
      auto g = p.tensor.grad();
      out.emplace_back(g.begin(), g.end());
    } else {
      out.emplace_back(p.tensor.numel(), 0.0);
    }
  }
  return out;
}

void axpy_values(const std::vector<ad::NamedTensor>& params, const std::vector<std::vector<double>>& dir, double a) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto v = ad::Tensor(params[i].tensor).mutable_values();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += a * dir[i][k];
  }
}

std::vector<std::vector<double>> snapshot(const std::vector<ad::NamedTensor>& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params) out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

void restore(const std::vector<ad::NamedTensor>& params, const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto v = ad::Tensor(params[i].tensor).mutable_values();
    std::copy(values[i].begin(), values[i].end(), v.begin());
  }
}

void set_grads(const std::vector<ad::NamedTensor>& params, const std::vector<std::vector<double>>& grads) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto g = ad::Tensor(params[i].tensor).mutable_grad();
    std::copy(grads[i].begin(), grads[i].end(), g.begin());
  }
}

}  // namespace

void SearchConfig::validate() const {
  if (epochs < 1) throw ConfigError("search epochs must be at least 1");
  if (train_batch == 0 || val_batch == 0) throw ConfigError("search batch sizes must be positive");
  if (!(w_lr_max > 0.0) || !(w_lr_min > 0.0) || !(arch_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(w_momentum >= 0.0 && w_momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(w_weight_decay >= 0.0) || !(arch_weight_decay >= 0.0)) throw ConfigError("weight decay must be nonnegative");
  if (!(grad_clip > 0.0)) throw ConfigError("grad_clip must be positive");
}

SearchState::SearchState(const nas::SupernetConfig& net_cfg, const SearchConfig& cfg)
    : net(net_cfg, cfg.seed, cfg.sharing),
      config(cfg),
      w_opt(weight_optimizer(cfg), net.weights().parameters()),
      alpha_opt(arch_optimizer(cfg), net.alpha_parameters()),
      beta_opt(arch_optimizer(cfg), net.beta_parameters()) {
  cfg.validate();
}

std::vector<ad::NamedTensor> SearchState::all_parameters() const {
  std::vector<ad::NamedTensor> out = net.weights().parameters();
  for (const auto& p : net.arch_parameters()) out.push_back(p);
  return out;
}

double compute_arch_gradients(SearchState& s, const data::Batch& val, const data::Batch* train) {
  require_tag(val, data::SplitTag::Validation, "architecture step");
  const auto weights = s.net.weights().parameters();
  const auto arch = s.net.arch_parameters();
  clear_grads(weights);
  clear_grads(arch);
  if (!s.config.second_order) {
    const double loss = loss_and_grads(s, val, false);
    clear_grads(weights);
    return loss;
  }

  if (train == nullptr) throw StateError("second-order architecture step needs a training batch");
  require_tag(*train, data::SplitTag::Train, "second-order architecture step");
  const double xi = s.w_opt.learning_rate();
  const double wd = s.config.w_weight_decay;
  const auto w0 = snapshot(weights);

  // Virtual step w' = w - xi (grad L_train + wd w).
  loss_and_grads(s, *train, false);
  auto g_train = copy_grads(weights);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    for (std::size_t k = 0; k < g_train[i].size(); ++k) g_train[i][k] += wd * w0[i][k];
  }
  axpy_values(weights, g_train, -xi);
  clear_grads(weights);
  clear_grads(arch);

  // Gradients of L_val at w'.
  double val_loss = 0.0;
  val_loss = loss_and_grads(s, val, false);
  const auto d_arch = copy_grads(arch);
  const auto d_w = copy_grads(weights);
  double norm = 0.0;
  for (const auto& g : d_w) {
    for (double v : g) norm += v * v;
  }
  norm = std::sqrt(norm);

  std::vector<std::vector<double>> result = d_arch;
  if (norm > 0.0) {
    // Finite-difference Hessian-vector product around w0.
    const double eps = 0.01 / norm;
    restore(weights, w0);
    axpy_values(weights, d_w, eps);
    clear_grads(weights);
    clear_grads(arch);
    loss_and_grads(s, *train, false);
    const auto g_plus = copy_grads(arch);
    restore(weights, w0);
    axpy_values(weights, d_w, -eps);
    clear_grads(weights);
    clear_grads(arch);
    loss_and_grads(s, *train, false);
    const auto g_minus = copy_grads(arch);
    for (std::size_t i = 0; i < result.size(); ++i) {
      for (std::size_t k = 0; k < result[i].size(); ++k) {
        result[i][k] -= xi * (g_plus[i][k] - g_minus[i][k]) / (2.0 * eps);
      }
    }
  }
  restore(weights, w0);
  clear_grads(weights);
  clear_grads(arch);
  set_grads(arch, result);
  return val_loss;
}

double update_alpha(SearchState& s, const data::Batch& val, const data::Batch* train) {
  const double loss = compute_arch_gradients(s, val, train);
  ad::check_finite_grads(s.net.alpha_parameters(), "alpha update");
  s.alpha_opt.step();
  ++s.alpha_steps;
  return loss;
}

double update_beta(SearchState& s, const data::Batch& val, const data::Batch* train) {
  const double loss = compute_arch_gradients(s, val, train);
  ad::check_finite_grads(s.net.beta_parameters(), "beta update");
  s.beta_opt.step();
  ++s.beta_steps;
  return loss;
}

double update_arch(SearchState& s, const data::Batch& val, const data::Batch* train) {
  const double loss = compute_arch_gradients(s, val, train);
  ad::check_finite_grads(s.net.alpha_parameters(), "alpha update");
  ad::check_finite_grads(s.net.beta_parameters(), "beta update");
  s.alpha_opt.step();
  s.beta_opt.step();
  ++s.alpha_steps;
  ++s.beta_steps;
  return loss;
}

double train_step(SearchState& s, const data::Batch& train) {
  require_tag(train, data::SplitTag::Train, "weight step");
  const auto weights = s.net.weights().parameters();
  clear_grads(weights);
  clear_grads(s.net.arch_parameters());
  const double loss = loss_and_grads(s, train, true);
  ad::check_finite_grads(weights, "weight step");
  ad::clip_grad_norm(weights, s.config.grad_clip);
  s.w_opt.step();
  clear_grads(s.net.arch_parameters());
  ++s.w_steps;
  return loss;
}

void run_search(SearchState& s, const data::Dataset& train, const data::Dataset& val, const SearchCallback& on_epoch,
                const SearchCallback& on_step) {
  const SearchConfig& cfg = s.config;
  data::Batcher train_batches(train, cfg.train_batch, data::SplitTag::Train, derive_seed(cfg.seed, "search.train"));
  data::Batcher val_batches(val, cfg.val_batch, data::SplitTag::Validation, derive_seed(cfg.seed, "search.val"));
  if (s.epoch == 0 && s.history.empty()) {
    const LossAccuracy init = evaluate(s.net, val, cfg.val_batch);
    s.initial = {0, 0.0, init.loss, init.accuracy, cfg.w_lr_max};
  }
  const int total = static_cast<int>(cfg.epochs);
  while (s.epoch < cfg.epochs) {
    const std::size_t e = s.epoch;
    const double lr = ad::cosine_learning_rate(cfg.w_lr_max, cfg.w_lr_min, static_cast<int>(e), total);
    s.w_opt.set_learning_rate(lr);
    const auto tb = train_batches.epoch(e);
    const auto vb = val_batches.epoch(e);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < tb.size(); ++b) {
      const data::Batch& v = vb[b % vb.size()];
      try {
        update_arch(s, v, cfg.second_order ? &tb[b] : nullptr);
        if (on_step) on_step(s);
        loss_sum += train_step(s, tb[b]) * static_cast<double>(tb[b].size());
        if (on_step) on_step(s);
      } catch (const NumericalError& err) {
        throw NumericalError("search epoch " + std::to_string(e + 1) + " batch " + std::to_string(b) + ": " +
                             err.what());
      }
      seen += tb[b].size();
    }
    const LossAccuracy v = evaluate(s.net, val, cfg.val_batch);
    ++s.epoch;
    s.history.push_back({s.epoch, loss_sum / static_cast<double>(seen), v.loss, v.accuracy, lr});
    if (on_epoch) on_epoch(s);
  }
}

SearchResult alternate_search(const data::Dataset& train, const data::Dataset& val, const nas::SupernetConfig& net_cfg,
                              const SearchConfig& cfg, const SearchCallback& on_epoch,
                              const SearchCallback& on_step) {
  SearchState state(net_cfg, cfg);
  run_search(state, train, val, on_epoch, on_step);
  nas::Genotype g = state.net.discretize();
  return {std::move(g), std::move(state)};
}

}  // namespace emdarts::search
