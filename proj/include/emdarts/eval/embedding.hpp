#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "emdarts/data/dataset.hpp"
#include "emdarts/eval/metrics.hpp"
#include "emdarts/supernet/model.hpp"

namespace emdarts::eval {

// L2-normalised pooled final-node features, one row per window.
struct EmbeddingSet {
  std::size_t dim = 0;
  std::vector<double> values;  // row-major [size, dim]
  std::vector<int> labels;
  std::vector<std::size_t> window_index;

  std::size_t size() const { return labels.size(); }
  const double* row(std::size_t i) const { return values.data() + i * dim; }
};

// Eval mode, no tape. NumericalError names any window with a non-finite or
// zero embedding.
EmbeddingSet extract_embeddings(const nas::Model& model, const data::Dataset& d, std::size_t batch_size = 128);

double cosine_similarity(const double* a, const double* b, std::size_t dim);

// Genuine: every same-subject pair. Impostor: every cross-subject pair, or a
// seeded uniform sample of exactly max_impostor_pairs distinct pairs when
// there are more. InputError when there are no genuine or no impostor pairs.
ScoreSet score_pairs(const EmbeddingSet& e, std::size_t max_impostor_pairs = 1000000, std::uint64_t seed = 0);

}  // namespace emdarts::eval
