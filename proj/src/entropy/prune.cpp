#include "emdarts/entropy/prune.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "emdarts/error.hpp"
#include "emdarts/rng.hpp"
#include "emdarts/supernet/geometry.hpp"

namespace emdarts::entropy {

namespace {

using ops::GlobalOpKind;

nas::Network rebuild(const nas::Network& parent, const nas::Genotype& g, std::uint64_t seed) {
  nas::Network child(g, parent.num_classes(), seed);
  child.weights().copy_matching_from(parent.weights());
  return child;
}

search::TrainConfig round_config(const PruneConfig& cfg, std::size_t round) {
  search::TrainConfig tc = cfg.retrain;
  tc.seed = derive_seed(cfg.retrain.seed, "retrain", round);
  return tc;
}

}  // namespace

bool is_identity_node(const nas::Genotype& g, std::size_t node) {
  if (node == 0 || node >= g.nodes) return false;
  for (const auto& e : g.global_edges) {
    if (e.to != node) continue;
    if (e.from + 1 == node) {
      if (e.op != GlobalOpKind::SkipConnect) return false;
    } else if (e.op != GlobalOpKind::None) {
      return false;
    }
  }
  return true;
}

std::vector<std::size_t> removable_nodes(const nas::Genotype& g) {
  std::vector<std::size_t> out;
  for (std::size_t j = 1; j < g.nodes; ++j) {
    if (std::find(g.reduction_nodes.begin(), g.reduction_nodes.end(), j) != g.reduction_nodes.end()) continue;
    if (is_identity_node(g, j)) continue;
    const bool has_cell = std::any_of(g.global_edges.begin(), g.global_edges.end(), [&](const auto& e) {
      return e.to == j && e.op == GlobalOpKind::Cell;
    });
    if (has_cell) out.push_back(j);
  }
  return out;
}

nas::Genotype remove_node(const nas::Genotype& g, std::size_t node) {
  if (node == 0 || node >= g.nodes) throw InputError("node " + std::to_string(node) + " cannot be removed");
  if (std::find(g.reduction_nodes.begin(), g.reduction_nodes.end(), node) != g.reduction_nodes.end()) {
    throw InputError("reduction node " + std::to_string(node) + " cannot be removed");
  }
  nas::Genotype out = g;
  for (auto& e : out.global_edges) {
    if (e.to == node) e.op = e.from + 1 == node ? GlobalOpKind::SkipConnect : GlobalOpKind::None;
  }
  out.cells.erase(std::remove_if(out.cells.begin(), out.cells.end(), [&](const auto& c) { return c.to == node; }),
                  out.cells.end());
  out.validate();
  return out;
}

std::size_t PruneLog::removals() const {
  return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), [](const auto& s) { return s.accepted; }));
}

void write_prune_log(const PruneLog& log, std::ostream& out) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", log.initial_accuracy);
  out << "initial_accuracy " << buf << '\n';
  out << "steps " << log.steps.size() << '\n';
  for (const auto& s : log.steps) {
    out << "node " << s.node;
    std::snprintf(buf, sizeof buf, "%.17g", s.te);
    out << " te " << buf;
    std::snprintf(buf, sizeof buf, "%.17g", s.accuracy);
    out << " accuracy " << buf << (s.accepted ? " accepted" : " rejected") << '\n';
  }
  out << "removals " << log.removals() << '\n';
  out << "stop_reason " << log.stop_reason << '\n';
}

PruneResult tes_prune(nas::Network net, const data::Dataset& train, const data::Dataset& val, const PruneConfig& cfg) {
  const data::Batch probe = probe_batch(train, cfg.probe_seed, cfg.probe_size);
  PruneResult result{net.genotype(), std::move(net), {}, {}};
  result.log.initial_accuracy = search::evaluate(result.network, val).accuracy;
  double best = result.log.initial_accuracy;
  for (std::size_t round = 0;; ++round) {
    const auto candidates = removable_nodes(result.genotype);
    if (candidates.empty()) {
      result.log.stop_reason = "no removable layers";
      break;
    }
    EntropyReport report = entropy_report(collect_trace(result.network, probe));
    report.probe_seed = cfg.probe_seed;
    std::size_t pick = candidates.front();
    for (std::size_t j : candidates) {
      if (report.transfer(j) < report.transfer(pick)) pick = j;
    }
    const double te = report.transfer(pick);
    result.reports.push_back(std::move(report));

    nas::Genotype g = remove_node(result.genotype, pick);
    const search::TrainConfig tc = round_config(cfg, round);
    nas::Network child = rebuild(result.network, g, tc.seed);
    search::train_network(child, train, tc);
    const double acc = search::evaluate(child, val).accuracy;
    const bool accept = acc >= best;
    result.log.steps.push_back({pick, te, acc, accept});
    if (!accept) {
      result.log.stop_reason = round == 0 ? "first removal rejected" : "accuracy decreased";
      break;
    }
    best = acc;
    result.genotype = std::move(g);
    result.network = std::move(child);
  }
  return result;
}

RandomPruneResult random_prune(nas::Network net, const data::Dataset& train, const data::Dataset& val,
                               std::size_t count, const PruneConfig& cfg, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "random_prune"));
  RandomPruneResult result{net.genotype(), {}, 0.0};
  nas::Network current = std::move(net);
  for (std::size_t round = 0; round < count; ++round) {
    const auto candidates = removable_nodes(result.genotype);
    if (candidates.empty()) break;
    const std::size_t pick = candidates[rng.below(candidates.size())];
    result.genotype = remove_node(result.genotype, pick);
    result.removed.push_back(pick);
    const search::TrainConfig tc = round_config(cfg, round);
    nas::Network child = rebuild(current, result.genotype, tc.seed);
    search::train_network(child, train, tc);
    current = std::move(child);
  }
  result.accuracy = search::evaluate(current, val).accuracy;
  return result;
}

}  // namespace emdarts::entropy
