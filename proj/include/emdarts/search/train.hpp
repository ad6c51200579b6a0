#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "emdarts/data/dataset.hpp"
#include "emdarts/supernet/genotype.hpp"
#include "emdarts/supernet/model.hpp"
#include "emdarts/supernet/network.hpp"

namespace emdarts::search {

struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Mean cross-entropy and accuracy over a whole dataset, eval mode, no tape.
LossAccuracy evaluate(const nas::Model& model, const data::Dataset& d, std::size_t batch_size = 128);

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double lr_max = 0.025;
  double lr_min = 0.001;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double grad_clip = 5.0;
  double drop_path_prob = 0.3;  // reached at the last epoch, ramped linearly from 0
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;      // mean over the epoch's batches, train mode
  double train_accuracy = 0.0;
  double lr = 0.0;
  double drop_path_prob = 0.0;
};

using TrainCallback = std::function<void(const TrainEpoch&)>;

// Momentum SGD with a cosine schedule and drop-path on non-skip local ops.
// Batch order and drop-path masks are seeded from cfg.seed.
std::vector<TrainEpoch> train_network(nas::Network& net, const data::Dataset& train, const TrainConfig& cfg,
                                      const TrainCallback& on_epoch = {});

struct TrainResult {
  nas::Network network;
  std::vector<TrainEpoch> history;
};

// Fresh weights from cfg.seed, then train_network.
TrainResult train_final(const nas::Genotype& genotype, const data::Dataset& train, const TrainConfig& cfg,
                        const TrainCallback& on_epoch = {});

}  // namespace emdarts::search
