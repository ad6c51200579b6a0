#include "emdarts/supernet/genotype.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "emdarts/error.hpp"
#include "emdarts/supernet/geometry.hpp"

namespace emdarts::nas {

namespace {

constexpr std::string_view kHeader = "emdarts-genotype v1";

std::string pair_text(std::size_t a, std::size_t b) {
  return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}

}  // namespace

void canonicalize(Genotype& g) {
  auto global_key = [](const GlobalEdgeChoice& e) { return std::pair(e.to, e.from); };
  std::sort(g.global_edges.begin(), g.global_edges.end(),
            [&](const auto& a, const auto& b) { return global_key(a) < global_key(b); });
  std::sort(g.cells.begin(), g.cells.end(),
            [](const auto& a, const auto& b) { return std::pair(a.to, a.from) < std::pair(b.to, b.from); });
  for (auto& c : g.cells) {
    std::sort(c.edges.begin(), c.edges.end(),
              [](const auto& a, const auto& b) { return std::pair(a.to, a.from) < std::pair(b.to, b.from); });
  }
  std::sort(g.reduction_nodes.begin(), g.reduction_nodes.end());
}

void Genotype::validate() const {
  if (nodes < 3) throw ValidationError("genotype needs at least 3 global nodes");
  if (cell_nodes < 1) throw ValidationError("genotype needs at least one cell node");
  if (stem_channels < 1) throw ValidationError("genotype stem_channels must be positive");
  try {
    Geometry geometry(nodes, cell_nodes, stem_channels, reduction_nodes);
  } catch (const ConfigError& e) {
    throw ValidationError(e.what());
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& e : global_edges) {
    if (e.from >= e.to) throw ValidationError("cyclic or self global edge " + pair_text(e.from, e.to));
    if (e.to >= nodes) throw ValidationError("global edge " + pair_text(e.from, e.to) + " beyond node count");
    if (!seen.emplace(e.from, e.to).second) throw ValidationError("duplicate global edge " + pair_text(e.from, e.to));
  }
  if (seen.size() != nodes * (nodes - 1) / 2) throw ValidationError("genotype is missing global edges");
  std::set<std::pair<std::size_t, std::size_t>> cell_edges;
  for (const auto& c : cells) {
    if (global_op(c.from, c.to) != ops::GlobalOpKind::Cell) {
      throw ValidationError("cell listed on non-cell global edge " + pair_text(c.from, c.to));
    }
    if (!cell_edges.emplace(c.from, c.to).second) {
      throw ValidationError("duplicate cell on global edge " + pair_text(c.from, c.to));
    }
    std::vector<std::size_t> indegree(cell_nodes + 2, 0);
    std::set<std::pair<std::size_t, std::size_t>> local_seen;
    for (const auto& le : c.edges) {
      if (le.from >= le.to) throw ValidationError("cyclic local edge " + pair_text(le.from, le.to));
      if (le.to < 2 || le.to >= cell_nodes + 2) throw ValidationError("local edge target out of range");
      if (le.op == ops::LocalOpKind::None) throw ValidationError("retained local edge cannot be 'none'");
      if (!local_seen.emplace(le.from, le.to).second) throw ValidationError("duplicate local edge");
      ++indegree[le.to];
    }
    for (std::size_t n = 2; n < cell_nodes + 2; ++n) {
      if (indegree[n] != 2) {
        throw ValidationError("cell " + pair_text(c.from, c.to) + " node " + std::to_string(n) + " has " +
                              std::to_string(indegree[n]) + " inputs, expected 2");
      }
    }
  }
  for (const auto& e : global_edges) {
    if (e.op == ops::GlobalOpKind::Cell && !cell_edges.count({e.from, e.to})) {
      throw ValidationError("global edge " + pair_text(e.from, e.to) + " is a cell but has no cell architecture");
    }
  }
}

ops::GlobalOpKind Genotype::global_op(std::size_t from, std::size_t to) const {
  for (const auto& e : global_edges) {
    if (e.from == from && e.to == to) return e.op;
  }
  throw ValidationError("no global edge " + pair_text(from, to));
}

const CellGenotype* Genotype::cell(std::size_t from, std::size_t to) const {
  for (const auto& c : cells) {
    if (c.from == from && c.to == to) return &c;
  }
  return nullptr;
}

std::string Genotype::to_text() const {
  Genotype g = *this;
  canonicalize(g);
  std::ostringstream out;
  out << kHeader << '\n';
  out << "nodes " << g.nodes << '\n';
  out << "cell_nodes " << g.cell_nodes << '\n';
  out << "stem_channels " << g.stem_channels << '\n';
  out << "reduction_nodes";
  if (g.reduction_nodes.empty()) out << " -";
  for (std::size_t r : g.reduction_nodes) out << ' ' << r;
  out << '\n';
  for (const auto& e : g.global_edges) out << "global " << e.from << ' ' << e.to << ' ' << ops::op_name(e.op) << '\n';
  for (const auto& c : g.cells) {
    for (const auto& le : c.edges) {
      out << "local " << c.from << ' ' << c.to << ' ' << le.from << ' ' << le.to << ' ' << ops::op_name(le.op) << '\n';
    }
  }
  return out.str();
}

Genotype Genotype::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) -> FormatError {
    return FormatError("genotype line " + std::to_string(line_no) + ": " + why);
  };
  if (!std::getline(in, line) || line != kHeader) {
    line_no = 1;
    throw fail("expected header '" + std::string(kHeader) + "'");
  }
  line_no = 1;
  Genotype g;
  bool have_nodes = false, have_cell_nodes = false, have_stem = false, have_reduction = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto read_size = [&](const char* what) {
      long long v = -1;
      if (!(ls >> v) || v < 0) throw fail(std::string("expected non-negative integer for ") + what);
      return static_cast<std::size_t>(v);
    };
    if (key == "nodes") {
      g.nodes = read_size("nodes");
      have_nodes = true;
    } else if (key == "cell_nodes") {
      g.cell_nodes = read_size("cell_nodes");
      have_cell_nodes = true;
    } else if (key == "stem_channels") {
      g.stem_channels = read_size("stem_channels");
      have_stem = true;
    } else if (key == "reduction_nodes") {
      std::string tok;
      while (ls >> tok) {
        if (tok == "-") continue;
        try {
          g.reduction_nodes.push_back(std::stoul(tok));
        } catch (const std::exception&) {
          throw fail("bad reduction node '" + tok + "'");
        }
      }
      have_reduction = true;
      continue;
    } else if (key == "global") {
      GlobalEdgeChoice e;
      e.from = read_size("edge source");
      e.to = read_size("edge target");
      std::string op;
      if (!(ls >> op)) throw fail("missing op name");
      e.op = ops::parse_global_op(op);
      g.global_edges.push_back(e);
    } else if (key == "local") {
      const std::size_t gi = read_size("cell source");
      const std::size_t gj = read_size("cell target");
      LocalEdgeChoice le;
      le.from = read_size("local source");
      le.to = read_size("local target");
      std::string op;
      if (!(ls >> op)) throw fail("missing op name");
      le.op = ops::parse_local_op(op);
      auto it = std::find_if(g.cells.begin(), g.cells.end(), [&](const auto& c) { return c.from == gi && c.to == gj; });
      if (it == g.cells.end()) {
        g.cells.push_back(CellGenotype{gi, gj, {}});
        it = std::prev(g.cells.end());
      }
      it->edges.push_back(le);
    } else {
      throw fail("unknown record '" + key + "'");
    }
    std::string extra;
    if (ls >> extra) throw fail("trailing token '" + extra + "'");
  }
  if (!have_nodes || !have_cell_nodes || !have_stem || !have_reduction) {
    throw FormatError("genotype is missing one of nodes/cell_nodes/stem_channels/reduction_nodes");
  }
  canonicalize(g);
  g.validate();
  return g;
}

Genotype read_genotype_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open genotype file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return Genotype::parse(buf.str());
}

void write_genotype_file(const Genotype& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write genotype file '" + path + "'");
  out << g.to_text();
}

}  // namespace emdarts::nas
