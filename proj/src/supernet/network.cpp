#include "emdarts/supernet/network.hpp"

#include <fstream>
#include <sstream>

#include "emdarts/autodiff/functional.hpp"
#include "emdarts/error.hpp"

namespace emdarts::nas {

namespace {

constexpr std::string_view kWeightsHeader = "emdarts-weights v1";

Geometry checked_geometry(const Genotype& g) {
  g.validate();
  return Geometry(g.nodes, g.cell_nodes, g.stem_channels, g.reduction_nodes);
}

}  // namespace

Network::Network(const Genotype& genotype, std::size_t num_classes, std::uint64_t seed)
    : genotype_(genotype), geometry_(checked_geometry(genotype)), num_classes_(num_classes) {
  if (num_classes_ < 1) throw ConfigError("num_classes must be positive");
  canonicalize(genotype_);
  Rng rng(derive_seed(seed, "weights"));
  stem_ = Stem::create(geometry_.stem_channels(), weights_, rng);
  for (const auto& e : genotype_.global_edges) {
    edges_.push_back(
        GlobalEdge::create_discrete(geometry_, e.from, e.to, e.op, genotype_.cell(e.from, e.to), weights_, rng));
  }
  head_ = Head::create(embedding_dim(), num_classes_, weights_, rng);
}

ForwardResult Network::forward(const Tensor& x, const ops::ForwardContext& ctx) const {
  ForwardResult result;
  result.nodes.push_back(stem_.forward(x, ctx));
  std::size_t e = 0;
  for (std::size_t j = 1; j < geometry_.nodes(); ++j) {
    std::vector<Tensor> incoming;
    for (std::size_t i = 0; i < j; ++i, ++e) {
      Tensor y = edges_[e].forward(result.nodes[i], ctx);
      if (y.defined()) incoming.push_back(y);
    }
    if (incoming.empty()) {
      result.nodes.push_back(ad::zeros({x.dim(0), geometry_.channels(j), geometry_.length(j, x.dim(2))}));
    } else {
      result.nodes.push_back(ad::add_n(incoming));
    }
  }
  result.embedding = ad::global_avg_pool(result.nodes.back());
  result.logits = head_.forward(result.embedding);
  return result;
}

void Network::save(std::ostream& out) const {
  out << kWeightsHeader << '\n';
  out << "num_classes " << num_classes_ << '\n';
  const std::string text = genotype_.to_text();
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  out << "genotype_lines " << lines << '\n' << text;
  weights_.save(out);
}

Network Network::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kWeightsHeader) throw FormatError("weights file: missing '" + std::string(kWeightsHeader) + "' header");
  std::string key;
  std::size_t classes = 0;
  std::size_t lines = 0;
  if (!(in >> key >> classes) || key != "num_classes") throw FormatError("weights file: expected num_classes");
  if (!(in >> key >> lines) || key != "genotype_lines") throw FormatError("weights file: expected genotype_lines");
  std::getline(in, line);
  std::string text;
  for (std::size_t i = 0; i < lines; ++i) {
    if (!std::getline(in, line)) throw FormatError("weights file: truncated genotype");
    text += line + '\n';
  }
  Network net(Genotype::parse(text), classes, 0);
  net.weights_.load(in);
  return net;
}

void Network::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  save(out);
  if (!out) throw InputError("failed writing " + path);
}

Network Network::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open weights file " + path);
  return load(in);
}

}  // namespace emdarts::nas
