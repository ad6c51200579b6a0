#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace emdarts::nas {

// Fast/slow velocity windows have four channels.
inline constexpr std::size_t kInputChannels = 4;

struct SupernetConfig {
  std::size_t nodes = 9;       // global nodes M
  std::size_t cell_nodes = 4;  // intermediate nodes N per cell
  std::size_t stem_channels = 16;
  std::size_t num_classes = 2;
  // Global nodes whose incoming edges halve length and double width.
  std::vector<std::size_t> reduction_nodes = default_reduction_nodes(9);

  // ceil(M/3) and ceil(2M/3), restricted to [2, M-1].
  static std::vector<std::size_t> default_reduction_nodes(std::size_t nodes);

  void validate() const;
};

// Shapes and edge indexing shared by the supernet and discrete networks.
// Global edges (i, j), i < j, are indexed j-major: j(j-1)/2 + i. Inside a cell
// nodes 0 and 1 are the inputs and 2..N+1 the intermediates; local edges are
// indexed the same way, target-major.
class Geometry {
 public:
  Geometry(std::size_t nodes, std::size_t cell_nodes, std::size_t stem_channels,
           std::vector<std::size_t> reduction_nodes);
  explicit Geometry(const SupernetConfig& cfg)
      : Geometry(cfg.nodes, cfg.cell_nodes, cfg.stem_channels, cfg.reduction_nodes) {}

  std::size_t nodes() const { return nodes_; }
  std::size_t cell_nodes() const { return cell_nodes_; }
  std::size_t stem_channels() const { return stem_channels_; }
  const std::vector<std::size_t>& reduction_nodes() const { return reduction_nodes_; }
  bool is_reduction(std::size_t node) const;

  // Number of reductions applied before node j.
  std::size_t level(std::size_t node) const { return levels_.at(node); }
  std::size_t channels(std::size_t node) const { return stem_channels_ << level(node); }
  std::size_t length(std::size_t node, std::size_t input_length) const;

  std::size_t num_global_edges() const { return nodes_ * (nodes_ - 1) / 2; }
  static std::size_t global_edge_index(std::size_t from, std::size_t to) { return to * (to - 1) / 2 + from; }
  std::vector<std::pair<std::size_t, std::size_t>> global_edges() const;

  std::size_t num_local_edges() const { return local_edge_count(cell_nodes_); }
  static std::size_t local_edge_count(std::size_t cell_nodes);
  static std::size_t local_edge_index(std::size_t from, std::size_t to) { return to * (to - 1) / 2 - 1 + from; }
  std::vector<std::pair<std::size_t, std::size_t>> local_edges() const;

 private:
  std::size_t nodes_;
  std::size_t cell_nodes_;
  std::size_t stem_channels_;
  std::vector<std::size_t> reduction_nodes_;
  std::vector<std::size_t> levels_;
};

std::string edge_prefix(std::size_t from, std::size_t to);

}  // namespace emdarts::nas
