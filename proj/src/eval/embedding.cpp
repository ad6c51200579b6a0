#include "emdarts/eval/embedding.hpp"

#include <cmath>
#include <unordered_set>

#include "emdarts/error.hpp"
#include "emdarts/rng.hpp"

namespace emdarts::eval {

EmbeddingSet extract_embeddings(const nas::Model& model, const data::Dataset& d, std::size_t batch_size) {
  data::Batcher batcher(d, batch_size, data::SplitTag::Test, 0);
  ops::ForwardContext ctx;
  ctx.mode = ops::Mode::Eval;
  EmbeddingSet out;
  for (const auto& batch : batcher.sequential()) {
    const ad::Tensor emb = model.forward(batch.x, ctx).embedding;
    const std::size_t dim = emb.dim(1);
    out.dim = dim;
    const auto v = emb.values();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const std::size_t w = batch.indices[i];
      double norm = 0.0;
      for (std::size_t k = 0; k < dim; ++k) norm += v[i * dim + k] * v[i * dim + k];
      norm = std::sqrt(norm);
      if (!std::isfinite(norm) || norm == 0.0) {
        throw NumericalError("embedding of window " + std::to_string(w) + " (" + d.windows[w].subject + "/" +
                             d.windows[w].session + " #" + std::to_string(d.windows[w].window_index) +
                             ") is not finite and nonzero");
      }
      for (std::size_t k = 0; k < dim; ++k) out.values.push_back(v[i * dim + k] / norm);
      out.labels.push_back(batch.labels[i]);
      out.window_index.push_back(w);
    }
  }
  return out;
}

double cosine_similarity(const double* a, const double* b, std::size_t dim) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  return dot / std::sqrt(na * nb);
}

ScoreSet score_pairs(const EmbeddingSet& e, std::size_t max_impostor_pairs, std::uint64_t seed) {
  const std::size_t n = e.size();
  ScoreSet s;
  std::size_t cross = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (e.labels[i] == e.labels[j]) {
        s.genuine.push_back(cosine_similarity(e.row(i), e.row(j), e.dim));
      } else {
        ++cross;
      }
    }
  }
  if (s.genuine.empty()) throw InputError("no genuine pairs: every subject has a single window");
  if (cross == 0) throw InputError("no impostor pairs: only one subject present");
  if (cross <= max_impostor_pairs) {
    s.impostor.reserve(cross);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (e.labels[i] != e.labels[j]) s.impostor.push_back(cosine_similarity(e.row(i), e.row(j), e.dim));
      }
    }
    return s;
  }
  // Rejection sampling of distinct unordered cross-subject pairs.
  Rng rng(derive_seed(seed, "impostor_pairs"));
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(max_impostor_pairs * 2);
  s.impostor.reserve(max_impostor_pairs);
  while (s.impostor.size() < max_impostor_pairs) {
    std::size_t i = rng.below(n), j = rng.below(n);
    if (i == j || e.labels[i] == e.labels[j]) continue;
    if (i > j) std::swap(i, j);
    if (!seen.insert(static_cast<std::uint64_t>(i) * n + j).second) continue;
    s.impostor.push_back(cosine_similarity(e.row(i), e.row(j), e.dim));
  }
  return s;
}

}  // namespace emdarts::eval
