#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "emdarts/error.hpp"
#include "emdarts/preprocess/velocity.hpp"
#include "emdarts/rng.hpp"

namespace pre = emdarts::pre;

namespace {

pre::GazeSequence make_seq(std::vector<double> t, std::vector<double> x, std::vector<double> y = {}) {
  pre::GazeSequence s;
  if (y.empty()) y.assign(x.size(), 0.0);
  s.t = std::move(t);
  s.x = std::move(x);
  s.y = std::move(y);
  s.sample_rate_hz = 1.0;
  return s;
}

pre::GazeSequence random_walk(std::size_t n, double fs, std::uint64_t seed) {
  emdarts::Rng rng(seed);
  pre::GazeSequence s;
  s.sample_rate_hz = fs;
  double x = 0, y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    s.t.push_back(static_cast<double>(i) / fs);
    x += rng.normal() * (rng.uniform() < 0.05 ? 0.2 : 0.02);
    y += rng.normal() * 0.02;
    s.x.push_back(x);
    s.y.push_back(y);
  }
  return s;
}

double mean_of(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  return m / static_cast<double>(v.size());
}

double pop_std(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

TEST(Velocity, ConstantPositionIsZero) {
  const auto v = pre::to_velocity(make_seq({0, 0.001, 0.002}, {1, 1, 1}));
  EXPECT_EQ(v.theta_x, (std::vector<double>{0, 0}));
}

TEST(Velocity, AbsoluteDifferenceOverStep) {
  const auto v = pre::to_velocity(make_seq({0, 1, 2}, {0, 1, 3}));
  EXPECT_EQ(v.theta_x, (std::vector<double>{1, 2}));
  const auto w = pre::to_velocity(make_seq({0, 0.5, 1}, {3, 1, 0}, {0, 0, 4}));
  EXPECT_EQ(w.theta_x, (std::vector<double>{4, 2}));
  EXPECT_EQ(w.theta_y, (std::vector<double>{0, 8}));
}

TEST(Velocity, NanTouchingSamplesBecomeZero) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto v = pre::to_velocity(make_seq({0, 1, 2, 3, 4}, {0, 1, nan, 5, 7}));
  EXPECT_EQ(v.theta_x, (std::vector<double>{1, 0, 0, 2}));
}

TEST(Velocity, Errors) {
  EXPECT_THROW(pre::to_velocity(make_seq({0}, {0})), emdarts::InputError);
  EXPECT_THROW(pre::to_velocity(make_seq({0, 1, 1}, {0, 1, 2})), emdarts::InputError);
  EXPECT_THROW(pre::to_velocity(make_seq({0, 2, 1}, {0, 1, 2})), emdarts::InputError);
}

TEST(Velocity, TranslationInvariant) {
  auto s = random_walk(500, 100, 1);
  const auto a = pre::to_velocity(s);
  for (double& x : s.x) x += 0.5;
  const auto b = pre::to_velocity(s);
  for (std::size_t i = 0; i < a.theta_x.size(); ++i) EXPECT_NEAR(a.theta_x[i], b.theta_x[i], 1e-9);
  EXPECT_EQ(a.theta_y, b.theta_y);
}

TEST(FastSlow, AllZeroVelocities) {
  pre::VelocitySequence v{std::vector<double>(10, 0.0), std::vector<double>(10, 0.0)};
  const auto c = pre::split_fast_slow(v);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(c.fast_x[i], 0.0);
    EXPECT_EQ(c.fast_y[i], 0.0);
    EXPECT_EQ(c.slow_x[i], 0.0);
    EXPECT_EQ(c.slow_y[i], 0.0);
  }
}

TEST(FastSlow, BelowThresholdBecomesZscoredZero) {
  // speeds: 30 (truncated), 100, 50, hypot(30,30)=42.4 (kept)
  pre::VelocitySequence v{{30, 100, 50, 30}, {0, 0, 0, 30}};
  const auto c = pre::split_fast_slow(v);
  const std::vector<double> truncated_x = {0, 100, 50, 30};
  const double mu = mean_of(truncated_x), sigma = pop_std(truncated_x);
  EXPECT_NEAR(c.fast_x[0], (0 - mu) / sigma, 1e-12);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(c.fast_x[i], (truncated_x[i] - mu) / sigma, 1e-12);
  EXPECT_NEAR(c.slow_x[1], std::tanh(2.0), 1e-15);
  EXPECT_NEAR(c.slow_x[1], 0.9640, 1e-4);
}

TEST(FastSlow, JointSpeedDecidesBothAxes) {
  pre::VelocitySequence v{{35, 10, 0}, {35, 10, 0}};  // joint 49.5 kept, 14.1 dropped
  const auto c = pre::split_fast_slow(v);
  const std::vector<double> truncated = {35, 0, 0};
  const double mu = mean_of(truncated), sigma = pop_std(truncated);
  EXPECT_NEAR(c.fast_x[1], -mu / sigma, 1e-12);
  EXPECT_NEAR(c.fast_y[1], -mu / sigma, 1e-12);
  EXPECT_NEAR(c.fast_x[0], (35 - mu) / sigma, 1e-12);
}

TEST(FastSlow, ZeroVarianceFastChannelIsZero) {
  pre::VelocitySequence v{{100, 100, 100}, {0, 0, 0}};
  const auto c = pre::split_fast_slow(v);
  for (double f : c.fast_x) EXPECT_EQ(f, 0.0);
  for (double f : c.fast_y) EXPECT_EQ(f, 0.0);
}

TEST(FastSlow, FastIsStandardizedAndSlowBounded) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto v = pre::to_velocity(random_walk(3000, 1000, seed));
    const auto c = pre::split_fast_slow(v);
    for (const auto* ch : {&c.fast_x, &c.fast_y}) {
      if (pop_std(*ch) == 0.0) continue;
      EXPECT_NEAR(mean_of(*ch), 0.0, 1e-9);
      EXPECT_NEAR(pop_std(*ch), 1.0, 1e-9);
    }
    double max_theta = 0, max_slow = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_LT(std::fabs(c.slow_x[i]), 1.0);
      max_theta = std::max(max_theta, v.theta_x[i]);
      max_slow = std::max(max_slow, std::fabs(c.slow_x[i]));
      EXPECT_TRUE(std::isfinite(c.fast_x[i]));
    }
    EXPECT_EQ(max_slow, std::tanh(0.02 * max_theta));
  }
}

TEST(Segment, WindowCounts) {
  auto channels = [](std::size_t n) {
    pre::FastSlowChannels c;
    c.fast_x.assign(n, 1);
    c.fast_y.assign(n, 2);
    c.slow_x.assign(n, 0.3);
    c.slow_y.assign(n, 0.4);
    return c;
  };
  auto w = pre::segment_windows(channels(2500), 1000);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].length, 1000u);
  EXPECT_EQ(w[1].window_index, 1u);
  EXPECT_EQ(pre::segment_windows(channels(100), 50).size(), 2u);
  EXPECT_EQ(pre::segment_windows(channels(100), 50)[0].length, 50u);
  EXPECT_TRUE(pre::segment_windows(channels(999), 1000).empty());
  EXPECT_EQ(w[0].channel(1)[5], 2.0);
  EXPECT_EQ(w[0].channel(3)[999], 0.4);
}

TEST(Segment, ChannelOrderAndContiguity) {
  pre::FastSlowChannels c;
  for (std::size_t i = 0; i < 20; ++i) {
    c.fast_x.push_back(static_cast<double>(i));
    c.fast_y.push_back(100.0 + static_cast<double>(i));
    c.slow_x.push_back(0.01 * static_cast<double>(i));
    c.slow_y.push_back(-0.01 * static_cast<double>(i));
  }
  const auto w = pre::segment_windows(c, 10, "s1", "r2");
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[1].channel(0)[0], 10.0);
  EXPECT_EQ(w[1].channel(1)[3], 113.0);
  EXPECT_EQ(w[1].channel(2)[9], 0.01 * 19.0);
  EXPECT_EQ(w[1].subject, "s1");
  EXPECT_EQ(w[1].session, "r2");
}

TEST(Pipeline, DeterministicBitIdentical) {
  const auto s = random_walk(2500, 1000, 7);
  const auto a = pre::preprocess(s);
  const auto b = pre::preprocess(s);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].data, b[k].data);
}
