#include "emdarts/preprocess/velocity.hpp"

#include <algorithm>
#include <cmath>

#include "emdarts/error.hpp"

namespace emdarts::pre {

namespace {

void zscore(std::vector<double>& v) {
  if (v.empty()) return;
  double mean = 0.0;
  for (double a : v) mean += a;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double a : v) var += (a - mean) * (a - mean);
  const double sigma = std::sqrt(var / static_cast<double>(v.size()));
  if (sigma < kSigmaClamp) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  for (double& a : v) a = (a - mean) / sigma;
}

double clean(double v) { return std::isfinite(v) ? v : 0.0; }

}  // namespace

VelocitySequence to_velocity(const GazeSequence& seq) {
  const std::size_t n = seq.t.size();
  if (seq.x.size() != n || seq.y.size() != n) {
    throw InputError("gaze sequence " + seq.subject + "/" + seq.session + ": t, x, y lengths differ");
  }
  if (n < 2) throw InputError("gaze sequence " + seq.subject + "/" + seq.session + " has fewer than 2 samples");
  VelocitySequence v;
  v.theta_x.resize(n - 1);
  v.theta_y.resize(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    const double dt = seq.t[i] - seq.t[i - 1];
    if (!(dt > 0.0)) {
      throw InputError("gaze sequence " + seq.subject + "/" + seq.session + ": timestamps not increasing at sample " +
                       std::to_string(i));
    }
    v.theta_x[i - 1] = clean(std::fabs(seq.x[i] - seq.x[i - 1]) / dt);
    v.theta_y[i - 1] = clean(std::fabs(seq.y[i] - seq.y[i - 1]) / dt);
  }
  return v;
}

FastSlowChannels split_fast_slow(const VelocitySequence& v, const FastSlowParams& params) {
  const std::size_t n = v.theta_x.size();
  if (v.theta_y.size() != n) throw InputError("velocity axes differ in length");
  FastSlowChannels out;
  out.fast_x.resize(n);
  out.fast_y.resize(n);
  out.slow_x.resize(n);
  out.slow_y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double tx = v.theta_x[i];
    const double ty = v.theta_y[i];
    const bool fast = std::sqrt(tx * tx + ty * ty) >= params.v_min;
    out.fast_x[i] = fast ? tx : 0.0;
    out.fast_y[i] = fast ? ty : 0.0;
    out.slow_x[i] = std::tanh(params.c * tx);
    out.slow_y[i] = std::tanh(params.c * ty);
  }
  zscore(out.fast_x);
  zscore(out.fast_y);
  return out;
}

std::size_t window_length(double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) throw InputError("sample rate must be positive");
  const auto len = static_cast<std::size_t>(std::llround(sample_rate_hz));
  if (len == 0) throw InputError("sample rate below 0.5 Hz gives empty windows");
  return len;
}

std::vector<FastSlowWindow> segment_windows(const FastSlowChannels& channels, double sample_rate_hz,
                                            const std::string& subject, const std::string& session) {
  const std::size_t len = window_length(sample_rate_hz);
  const std::size_t count = channels.size() / len;
  const std::vector<double>* parts[] = {&channels.fast_x, &channels.fast_y, &channels.slow_x, &channels.slow_y};
  std::vector<FastSlowWindow> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    FastSlowWindow win;
    win.length = len;
    win.subject = subject;
    win.session = session;
    win.window_index = w;
    win.data.reserve(4 * len);
    for (const auto* p : parts) win.data.insert(win.data.end(), p->begin() + w * len, p->begin() + (w + 1) * len);
    out.push_back(std::move(win));
  }
  return out;
}

std::vector<FastSlowWindow> preprocess(const GazeSequence& seq, const FastSlowParams& params) {
  return segment_windows(split_fast_slow(to_velocity(seq), params), seq.sample_rate_hz, seq.subject, seq.session);
}

}  // namespace emdarts::pre
