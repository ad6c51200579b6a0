#pragma once

#include "emdarts/rng.hpp"

namespace emdarts::ops {

enum class Mode { Train, Eval };

// Per-forward switches shared by every layer of a network.
struct ForwardContext {
  Mode mode = Mode::Train;
  bool update_running_stats = true;
  // Drop-path applies to non-skip local ops of discrete networks only.
  double drop_path_prob = 0.0;
  Rng* drop_path_rng = nullptr;

  bool training() const { return mode == Mode::Train; }
};

}  // namespace emdarts::ops
