#include "emdarts/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "emdarts/error.hpp"
#include "emdarts/rng.hpp"

namespace emdarts::data {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinFixation = 0.1;  // s
constexpr double kFieldRadius = 15.0; // deg

SubjectLatents draw_latents(Rng& rng, double sample_rate_hz) {
  SubjectLatents s;
  s.drift_std = rng.uniform(0.05, 0.5);
  s.tremor_amplitude = rng.uniform(0.02, 0.15);
  s.tremor_frequency = std::min(rng.uniform(4.0, 30.0), 0.4 * sample_rate_hz);
  s.tremor_direction = rng.uniform(0.0, kPi);
  s.saccade_rate = rng.uniform(0.5, 3.0);
  s.saccade_peak_velocity = rng.uniform(150.0, 500.0);
  s.noise_std = rng.uniform(0.005, 0.03);
  return s;
}

SubjectLatents jitter(const SubjectLatents& s, double rel, Rng& rng) {
  auto j = [&](double v) { return v * std::max(0.5, 1.0 + rel * rng.normal()); };
  SubjectLatents out = s;
  out.drift_std = j(s.drift_std);
  out.tremor_amplitude = j(s.tremor_amplitude);
  out.tremor_frequency = j(s.tremor_frequency);
  out.tremor_direction = s.tremor_direction + rel * rng.normal();
  out.saccade_rate = j(s.saccade_rate);
  out.saccade_peak_velocity = j(s.saccade_peak_velocity);
  out.noise_std = j(s.noise_std);
  return out;
}

std::string label(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02zu", prefix, i);
  return buf;
}

struct Saccade {
  double onset, duration, dx, dy, peak;
};

// Displacement fraction covered after time tau of a sin^2 velocity profile.
double profile_fraction(double tau, double duration) {
  if (tau <= 0.0) return 0.0;
  if (tau >= duration) return 1.0;
  const double u = tau / duration;
  return u - std::sin(2.0 * kPi * u) / (2.0 * kPi);
}

pre::GazeSequence simulate_session(const SubjectLatents& s, const SyntheticConfig& cfg, std::size_t subject,
                                   std::size_t session, Rng& rng, std::vector<SaccadeEvent>& events) {
  const double dt = 1.0 / cfg.sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(cfg.seconds_per_session * cfg.sample_rate_hz));

  // Saccade schedule: exponential gaps, at least kMinFixation of fixation between saccades.
  std::vector<Saccade> saccades;
  double cx = 0.0, cy = 0.0;
  double t = kMinFixation + (-std::log(1.0 - rng.uniform()) / s.saccade_rate);
  const double end = static_cast<double>(n) * dt;
  while (t < end) {
    const double amplitude = rng.uniform(2.0, 12.0);
    double angle = rng.uniform(0.0, 2.0 * kPi);
    double dx = amplitude * std::cos(angle), dy = amplitude * std::sin(angle);
    if (std::hypot(cx + dx, cy + dy) > kFieldRadius) {
      dx = -dx;
      dy = -dy;
    }
    const double peak = s.saccade_peak_velocity * std::max(0.5, 1.0 + 0.05 * rng.normal());
    const double duration = 2.0 * amplitude / peak;
    saccades.push_back({t, duration, dx, dy, peak});
    events.push_back({subject, session, t, duration, amplitude, peak});
    cx += dx;
    cy += dy;
    t += duration + kMinFixation + (-std::log(1.0 - rng.uniform()) / s.saccade_rate);
  }

  pre::GazeSequence seq;
  seq.subject = label("s", subject);
  seq.session = label("r", session);
  seq.sample_rate_hz = cfg.sample_rate_hz;
  seq.t.resize(n);
  seq.x.resize(n);
  seq.y.resize(n);
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  const double ux = std::cos(s.tremor_direction), uy = std::sin(s.tremor_direction);
  const double drift_step = s.drift_std * std::sqrt(dt);
  double base_x = 0.0, base_y = 0.0;  // completed saccade displacement
  double drift_x = 0.0, drift_y = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = static_cast<double>(i) * dt;
    while (next < saccades.size() && saccades[next].onset + saccades[next].duration <= ti) {
      base_x += saccades[next].dx;
      base_y += saccades[next].dy;
      drift_x = drift_y = 0.0;  // new fixation target
      ++next;
    }
    double px = base_x, py = base_y;
    if (next < saccades.size() && saccades[next].onset < ti) {
      const double f = profile_fraction(ti - saccades[next].onset, saccades[next].duration);
      px += f * saccades[next].dx;
      py += f * saccades[next].dy;
    } else {
      drift_x += drift_step * rng.normal();
      drift_y += drift_step * rng.normal();
    }
    const double tremor = s.tremor_amplitude * std::sin(2.0 * kPi * s.tremor_frequency * ti + phase);
    seq.t[i] = ti;
    seq.x[i] = px + drift_x + tremor * ux + s.noise_std * rng.normal();
    seq.y[i] = py + drift_y + tremor * uy + s.noise_std * rng.normal();
  }
  return seq;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (num_subjects < 2) throw ConfigError("synthetic data needs at least 2 subjects");
  if (sessions_per_subject < 1) throw ConfigError("synthetic sessions_per_subject must be positive");
  if (!(seconds_per_session > 0.0)) throw ConfigError("synthetic seconds_per_session must be positive");
  if (!(sample_rate_hz > 0.0)) throw ConfigError("synthetic sample_rate_hz must be positive");
  if (seconds_per_session * sample_rate_hz < 2.0) throw ConfigError("synthetic sessions need at least 2 samples");
  if (!(session_jitter >= 0.0) || session_jitter >= 0.5) throw ConfigError("synthetic session_jitter must be in [0, 0.5)");
}

SyntheticData generate_synthetic_detailed(const SyntheticConfig& cfg) {
  cfg.validate();
  SyntheticData out;
  Rng latent_rng(derive_seed(cfg.seed, "synthetic.latents"));
  for (std::size_t s = 0; s < cfg.num_subjects; ++s) out.latents.push_back(draw_latents(latent_rng, cfg.sample_rate_hz));
  for (std::size_t s = 0; s < cfg.num_subjects; ++s) {
    for (std::size_t r = 0; r < cfg.sessions_per_subject; ++r) {
      Rng rng(derive_seed(derive_seed(cfg.seed, "synthetic.session", s), "session", r));
      const SubjectLatents session_latents = jitter(out.latents[s], cfg.session_jitter, rng);
      out.sequences.push_back(simulate_session(session_latents, cfg, s, r, rng, out.saccades));
    }
  }
  return out;
}

std::vector<pre::GazeSequence> generate_synthetic(const SyntheticConfig& cfg) {
  return generate_synthetic_detailed(cfg).sequences;
}

}  // namespace emdarts::data
