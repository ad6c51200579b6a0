#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace emdarts::pre {

// Raw gaze samples of one recording session. Angles in degrees, times in seconds.
struct GazeSequence {
  std::string subject;
  std::string session;
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> y;
  double sample_rate_hz = 0.0;

  std::size_t size() const { return t.size(); }
};

// Per-axis absolute angular velocity, one sample shorter than the input.
struct VelocitySequence {
  std::vector<double> theta_x;
  std::vector<double> theta_y;
};

struct FastSlowParams {
  double v_min = 40.0;  // deg/s
  double c = 0.02;
};

inline constexpr double kSigmaClamp = 1e-8;
inline constexpr std::size_t kNumChannels = 4;

// Channel order is fast_x, fast_y, slow_x, slow_y.
struct FastSlowChannels {
  std::vector<double> fast_x;
  std::vector<double> fast_y;
  std::vector<double> slow_x;
  std::vector<double> slow_y;

  std::size_t size() const { return fast_x.size(); }
};

// A fixed-length 4-channel window, stored channel-major ([4, length]).
struct FastSlowWindow {
  std::vector<double> data;
  std::size_t length = 0;
  std::string subject;
  std::string session;
  std::size_t window_index = 0;

  std::span<const double> channel(std::size_t c) const { return std::span(data).subspan(c * length, length); }
};

// |s_i - s_{i-1}| / (t_i - t_{i-1}) per axis; NaN results become 0.
// Throws InputError for fewer than 2 samples or non-increasing timestamps.
VelocitySequence to_velocity(const GazeSequence& seq);

// Fast: samples with joint speed below v_min are zeroed on both axes, then
// each axis is z-scored with its own mean and population std (all-zero when
// std is under kSigmaClamp). Slow: tanh(c * theta).
FastSlowChannels split_fast_slow(const VelocitySequence& v, const FastSlowParams& params = {});

// round(sample_rate_hz) samples per window.
std::size_t window_length(double sample_rate_hz);

// Non-overlapping windows; the trailing remainder is dropped.
std::vector<FastSlowWindow> segment_windows(const FastSlowChannels& channels, double sample_rate_hz,
                                            const std::string& subject = {}, const std::string& session = {});

// to_velocity -> split_fast_slow -> segment_windows.
std::vector<FastSlowWindow> preprocess(const GazeSequence& seq, const FastSlowParams& params = {});

}  // namespace emdarts::pre
