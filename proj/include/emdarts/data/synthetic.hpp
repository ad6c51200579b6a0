#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "emdarts/preprocess/velocity.hpp"

namespace emdarts::data {

// Per-subject behavioural parameters. Each session perturbs them by a few
// percent; subjects differ by far more.
struct SubjectLatents {
  double drift_std = 0.2;          // deg / sqrt(s), fixation random walk
  double tremor_amplitude = 0.05;  // deg
  double tremor_frequency = 10.0;  // Hz
  double tremor_direction = 0.0;   // radians
  double saccade_rate = 1.0;       // Hz
  double saccade_peak_velocity = 300.0;  // deg/s
  double noise_std = 0.01;         // deg
};

struct SyntheticConfig {
  std::size_t num_subjects = 8;
  std::size_t sessions_per_subject = 3;
  double seconds_per_session = 20.0;
  double sample_rate_hz = 100.0;
  double session_jitter = 0.03;  // relative std of per-session latent perturbation
  std::uint64_t seed = 0;

  void validate() const;
};

struct SaccadeEvent {
  std::size_t subject = 0;
  std::size_t session = 0;
  double onset = 0.0;     // s
  double duration = 0.0;  // s
  double amplitude = 0.0; // deg
  double peak_velocity = 0.0;  // deg/s
};

struct SyntheticData {
  std::vector<pre::GazeSequence> sequences;  // subject-major, sessions in order
  std::vector<SubjectLatents> latents;       // per subject
  std::vector<SaccadeEvent> saccades;
};

// Fixation/saccade alternation. Fixations are a drifting random walk plus a
// sinusoidal tremor; saccades follow a sin^2 velocity profile whose peak is
// the subject's saccade velocity; white measurement noise is added on top.
SyntheticData generate_synthetic_detailed(const SyntheticConfig& cfg);
std::vector<pre::GazeSequence> generate_synthetic(const SyntheticConfig& cfg);

}  // namespace emdarts::data
