#pragma once

#include "emdarts/data/dataset.hpp"
#include "emdarts/data/synthetic.hpp"
#include "emdarts/supernet/geometry.hpp"

namespace emdarts::testing {

struct Splits {
  data::Dataset train;
  data::Dataset val;
  data::Dataset test;
  data::Dataset fit;  // train and val together, as the final training sees it
};

// Synthetic subjects: every session but the last feeds a 70/30 split, the
// last session is the test set.
inline Splits synthetic_splits(std::size_t subjects, std::size_t sessions, double seconds, double rate_hz,
                               std::uint64_t seed) {
  data::SyntheticConfig cfg;
  cfg.num_subjects = subjects;
  cfg.sessions_per_subject = sessions;
  cfg.seconds_per_session = seconds;
  cfg.sample_rate_hz = rate_hz;
  cfg.seed = seed;
  const auto seqs = data::generate_synthetic(cfg);
  const auto [fit, held] = data::hold_out_last_session(seqs);
  auto all = data::windows_from(fit, {});
  auto test = data::windows_from(held, {}, all.subjects);
  auto [train, val] = data::split(all, {0.7, seed});
  return {std::move(train), std::move(val), std::move(test), std::move(all)};
}

inline nas::SupernetConfig tiny_supernet(std::size_t classes, std::size_t nodes = 3, std::size_t cell_nodes = 1,
                                         std::size_t stem = 4) {
  nas::SupernetConfig c;
  c.nodes = nodes;
  c.cell_nodes = cell_nodes;
  c.stem_channels = stem;
  c.num_classes = classes;
  c.reduction_nodes = nas::SupernetConfig::default_reduction_nodes(nodes);
  return c;
}

}  // namespace emdarts::testing
