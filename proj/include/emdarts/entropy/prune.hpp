#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "emdarts/data/dataset.hpp"
#include "emdarts/entropy/entropy.hpp"
#include "emdarts/search/train.hpp"
#include "emdarts/supernet/genotype.hpp"
#include "emdarts/supernet/network.hpp"

namespace emdarts::entropy {

// Node j is already an identity when its only live input is a skip from j-1.
bool is_identity_node(const nas::Genotype& g, std::size_t node);

// Nodes 1..M-1 that carry at least one cell on an incoming edge, excluding
// reduction nodes and identity nodes. At most M-1-|reductions| of them.
std::vector<std::size_t> removable_nodes(const nas::Genotype& g);

// Node's incoming edge from node-1 becomes skip_connect, every other
// incoming edge becomes none. Its outgoing edges are untouched.
nas::Genotype remove_node(const nas::Genotype& g, std::size_t node);

struct PruneConfig {
  search::TrainConfig retrain;  // budget after each removal; seed re-derived per round
  std::size_t probe_size = 1024;
  std::uint64_t probe_seed = 0;
};

struct PruneStep {
  std::size_t node = 0;
  double te = 0.0;
  double accuracy = 0.0;  // validation accuracy after retraining
  bool accepted = false;
};

struct PruneLog {
  double initial_accuracy = 0.0;
  std::vector<PruneStep> steps;
  std::string stop_reason;

  std::size_t removals() const;
};

void write_prune_log(const PruneLog& log, std::ostream& out);

struct PruneResult {
  nas::Genotype genotype;
  nas::Network network;
  PruneLog log;
  std::vector<EntropyReport> reports;  // one per round that computed TE
};

// Greedy removal: trace the probe, drop the removable node with the smallest
// TE, inherit weights, retrain, and keep the change only while validation
// accuracy does not fall below the best so far.
PruneResult tes_prune(nas::Network net, const data::Dataset& train, const data::Dataset& val, const PruneConfig& cfg);

struct RandomPruneResult {
  nas::Genotype genotype;
  std::vector<std::size_t> removed;
  double accuracy = 0.0;
};

// Baseline: `count` removals picked uniformly from the removable set, each
// followed by the same retraining as tes_prune. Nothing is rejected.
RandomPruneResult random_prune(nas::Network net, const data::Dataset& train, const data::Dataset& val,
                               std::size_t count, const PruneConfig& cfg, std::uint64_t seed);

}  // namespace emdarts::entropy
