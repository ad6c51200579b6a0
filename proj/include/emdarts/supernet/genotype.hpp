#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "emdarts/ops/op_kind.hpp"

namespace emdarts::nas {

struct GlobalEdgeChoice {
  std::size_t from = 0;
  std::size_t to = 0;
  ops::GlobalOpKind op = ops::GlobalOpKind::None;
  bool operator==(const GlobalEdgeChoice&) const = default;
};

struct LocalEdgeChoice {
  std::size_t from = 0;
  std::size_t to = 0;
  ops::LocalOpKind op = ops::LocalOpKind::SkipConnect;
  bool operator==(const LocalEdgeChoice&) const = default;
};

// The discrete architecture of one retained cell on global edge (from, to).
struct CellGenotype {
  std::size_t from = 0;
  std::size_t to = 0;
  std::vector<LocalEdgeChoice> edges;  // ordered by (to, from)
  bool operator==(const CellGenotype&) const = default;
};

// Discrete architecture. Text form:
//
//   emdarts-genotype v1
//   nodes 5
//   cell_nodes 2
//   stem_channels 8
//   reduction_nodes 2 4        ("-" when empty)
//   global <i> <j> <op>        one per pair i < j, j-major
//   local <i> <j> <src> <dst> <op>   per retained cell, cells in global order
//
// to_text() is canonical, so to_text(parse(s)) == s for any emitted s.
struct Genotype {
  std::size_t nodes = 0;
  std::size_t cell_nodes = 0;
  std::size_t stem_channels = 0;
  std::vector<std::size_t> reduction_nodes;
  std::vector<GlobalEdgeChoice> global_edges;
  std::vector<CellGenotype> cells;

  bool operator==(const Genotype&) const = default;

  // Throws ValidationError on cycles, missing/duplicate edges, wrong
  // in-degree or `none` local ops.
  void validate() const;

  ops::GlobalOpKind global_op(std::size_t from, std::size_t to) const;
  const CellGenotype* cell(std::size_t from, std::size_t to) const;

  std::string to_text() const;
  static Genotype parse(std::string_view text);
};

// Restores canonical ordering of edges and cells (in place).
void canonicalize(Genotype& g);

Genotype read_genotype_file(const std::string& path);
void write_genotype_file(const Genotype& g, const std::string& path);

}  // namespace emdarts::nas
