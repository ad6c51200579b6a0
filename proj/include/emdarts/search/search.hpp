#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "emdarts/autodiff/optimizer.hpp"
#include "emdarts/data/dataset.hpp"
#include "emdarts/supernet/supernet.hpp"

namespace emdarts::search {

struct SearchConfig {
  std::size_t epochs = 50;
  std::size_t train_batch = 32;
  std::size_t val_batch = 128;
  double w_lr_max = 0.025;
  double w_lr_min = 0.001;
  double w_momentum = 0.9;
  double w_weight_decay = 5e-4;
  double arch_lr = 3e-4;
  double arch_weight_decay = 1e-3;
  double grad_clip = 5.0;
  bool second_order = false;
  nas::AlphaSharing sharing = nas::AlphaSharing::PerCell;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SearchEpoch {
  std::size_t epoch = 0;  // 1-based; 0 is the state before any step
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;
};

// Everything a search run mutates. Weights, alpha blocks and beta each have
// their own optimizer; alpha and beta share one configuration.
class SearchState {
 public:
  SearchState(const nas::SupernetConfig& net_cfg, const SearchConfig& cfg);

  nas::Supernet net;
  SearchConfig config;
  ad::Optimizer w_opt;
  ad::Optimizer alpha_opt;
  ad::Optimizer beta_opt;
  std::size_t epoch = 0;
  SearchEpoch initial;               // val metrics before any step
  std::vector<SearchEpoch> history;  // one entry per completed epoch
  std::size_t alpha_steps = 0;
  std::size_t beta_steps = 0;
  std::size_t w_steps = 0;

  std::vector<ad::NamedTensor> all_parameters() const;
};

// Architecture gradients of L_val on `val`. First order by default; with
// second_order the unrolled correction uses `train` and the current w lr.
// Leaves gradients on alpha and beta only; returns L_val at the current w.
double compute_arch_gradients(SearchState& s, const data::Batch& val, const data::Batch* train = nullptr);

// One arch step for every alpha block (beta untouched).
double update_alpha(SearchState& s, const data::Batch& val, const data::Batch* train = nullptr);
// One arch step for beta (alpha untouched).
double update_beta(SearchState& s, const data::Batch& val, const data::Batch* train = nullptr);
// Alpha and beta stepped from the same validation pass. Returns L_val before the step.
double update_arch(SearchState& s, const data::Batch& val, const data::Batch* train = nullptr);
// One momentum-SGD step on w. Returns L_train before the step.
double train_step(SearchState& s, const data::Batch& train);

using SearchCallback = std::function<void(const SearchState&)>;

// Runs epochs state.epoch+1 .. config.epochs. Each epoch pairs every training
// batch with a validation batch: arch step on the validation batch, then a
// weight step on the training batch. Validation loss/accuracy are measured on
// the whole validation split (eval mode) after every epoch. `on_step` runs
// after every optimizer step (arch and weight).
void run_search(SearchState& s, const data::Dataset& train, const data::Dataset& val,
                const SearchCallback& on_epoch = {}, const SearchCallback& on_step = {});

struct SearchResult {
  nas::Genotype genotype;
  SearchState state;
};

SearchResult alternate_search(const data::Dataset& train, const data::Dataset& val, const nas::SupernetConfig& net_cfg,
                              const SearchConfig& cfg, const SearchCallback& on_epoch = {},
                              const SearchCallback& on_step = {});

}  // namespace emdarts::search
