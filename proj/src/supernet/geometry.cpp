#include "emdarts/supernet/geometry.hpp"

#include <algorithm>

#include "emdarts/error.hpp"

namespace emdarts::nas {

std::vector<std::size_t> SupernetConfig::default_reduction_nodes(std::size_t nodes) {
  std::vector<std::size_t> out;
  for (std::size_t r : {(nodes + 2) / 3, (2 * nodes + 2) / 3}) {
    if (r >= 2 && r + 1 <= nodes && std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  }
  return out;
}

void SupernetConfig::validate() const {
  if (nodes < 3) throw ConfigError("supernet needs at least 3 global nodes, got " + std::to_string(nodes));
  if (cell_nodes < 1) throw ConfigError("cells need at least one intermediate node");
  if (stem_channels < 1) throw ConfigError("stem_channels must be positive");
  if (num_classes < 1) throw ConfigError("num_classes must be positive");
  Geometry check(nodes, cell_nodes, stem_channels, reduction_nodes);
  (void)check;
}

Geometry::Geometry(std::size_t nodes, std::size_t cell_nodes, std::size_t stem_channels,
                   std::vector<std::size_t> reduction_nodes)
    : nodes_(nodes), cell_nodes_(cell_nodes), stem_channels_(stem_channels), reduction_nodes_(std::move(reduction_nodes)) {
  if (nodes_ < 3) throw ConfigError("supernet needs at least 3 global nodes");
  if (cell_nodes_ < 1) throw ConfigError("cells need at least one intermediate node");
  if (stem_channels_ < 1) throw ConfigError("stem_channels must be positive");
  std::sort(reduction_nodes_.begin(), reduction_nodes_.end());
  for (std::size_t i = 0; i < reduction_nodes_.size(); ++i) {
    const std::size_t r = reduction_nodes_[i];
    if (r < 2 || r >= nodes_) {
      throw ConfigError("reduction node " + std::to_string(r) + " outside [2, " + std::to_string(nodes_ - 1) + "]");
    }
    if (i > 0 && reduction_nodes_[i - 1] == r) throw ConfigError("duplicate reduction node " + std::to_string(r));
  }
  levels_.resize(nodes_);
  std::size_t level = 0;
  for (std::size_t j = 0; j < nodes_; ++j) {
    if (is_reduction(j)) ++level;
    levels_[j] = level;
  }
}

bool Geometry::is_reduction(std::size_t node) const {
  return std::binary_search(reduction_nodes_.begin(), reduction_nodes_.end(), node);
}

std::size_t Geometry::length(std::size_t node, std::size_t input_length) const {
  std::size_t t = input_length;
  for (std::size_t l = 0; l < level(node); ++l) t = (t + 1) / 2;
  return t;
}

std::vector<std::pair<std::size_t, std::size_t>> Geometry::global_edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t j = 1; j < nodes_; ++j) {
    for (std::size_t i = 0; i < j; ++i) out.emplace_back(i, j);
  }
  return out;
}

std::size_t Geometry::local_edge_count(std::size_t cell_nodes) {
  std::size_t n = 0;
  for (std::size_t j = 1; j <= cell_nodes; ++j) n += j + 1;
  return n;
}

std::vector<std::pair<std::size_t, std::size_t>> Geometry::local_edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t to = 2; to < cell_nodes_ + 2; ++to) {
    for (std::size_t from = 0; from < to; ++from) out.emplace_back(from, to);
  }
  return out;
}

std::string edge_prefix(std::size_t from, std::size_t to) {
  return "edge_" + std::to_string(from) + "_" + std::to_string(to);
}

}  // namespace emdarts::nas
