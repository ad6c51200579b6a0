#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "emdarts/autodiff/param_store.hpp"
#include "emdarts/supernet/genotype.hpp"
#include "emdarts/supernet/geometry.hpp"
#include "emdarts/supernet/global_edge.hpp"
#include "emdarts/supernet/model.hpp"

namespace emdarts::nas {

// Discrete network built from a genotype. Parameter names match the
// supernet's, so weights can be copied between networks whose genotypes
// share edges.
class Network : public Model {
 public:
  // Throws ValidationError for an invalid genotype.
  Network(const Genotype& genotype, std::size_t num_classes, std::uint64_t seed);

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  const Genotype& genotype() const { return genotype_; }
  const Geometry& geometry() const { return geometry_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t embedding_dim() const { return geometry_.channels(geometry_.nodes() - 1); }

  ForwardResult forward(const Tensor& x, const ops::ForwardContext& ctx) const override;

  ad::ParamStore& weights() override { return weights_; }
  const ad::ParamStore& weights() const override { return weights_; }
  std::size_t parameter_count() const { return weights_.parameter_count(); }

  // Text file: header, class count, the genotype, then every tensor as hex floats.
  void save(std::ostream& out) const;
  static Network load(std::istream& in);
  void save_file(const std::string& path) const;
  static Network load_file(const std::string& path);

 private:
  Genotype genotype_;
  Geometry geometry_;
  std::size_t num_classes_;
  ad::ParamStore weights_;
  Stem stem_;
  std::vector<GlobalEdge> edges_;
  Head head_;
};

}  // namespace emdarts::nas
