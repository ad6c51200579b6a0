#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "emdarts/eval/metrics.hpp"

namespace emdarts::testing {

struct OracleEer {
  double eer = 0.0;
  double threshold = 0.0;
};

// Counts acceptances at every candidate threshold, no sorting tricks.
inline OracleEer brute_force_eer(const eval::ScoreSet& s) {
  std::set<double> cands(s.genuine.begin(), s.genuine.end());
  cands.insert(s.impostor.begin(), s.impostor.end());
  OracleEer best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (double t : cands) {
    double fa = 0, fr = 0;
    for (double x : s.impostor) fa += x >= t ? 1 : 0;
    for (double x : s.genuine) fr += x < t ? 1 : 0;
    fa /= static_cast<double>(s.impostor.size());
    fr /= static_cast<double>(s.genuine.size());
    const double gap = std::fabs(fa - fr);
    if (gap < best_gap) {  // ascending order, so ties keep the lower threshold
      best_gap = gap;
      best = {(fa + fr) / 2, t};
    }
  }
  return best;
}

// Smallest threshold with FAR <= target, +inf included.
inline double brute_force_frr_at_far(const eval::ScoreSet& s, double target) {
  std::set<double> cands(s.genuine.begin(), s.genuine.end());
  cands.insert(s.impostor.begin(), s.impostor.end());
  cands.insert(std::numeric_limits<double>::infinity());
  for (double t : cands) {
    double fa = 0;
    for (double x : s.impostor) fa += x >= t ? 1 : 0;
    if (fa / static_cast<double>(s.impostor.size()) <= target) {
      double fr = 0;
      for (double x : s.genuine) fr += x < t ? 1 : 0;
      return fr / static_cast<double>(s.genuine.size());
    }
  }
  return 1.0;
}

}  // namespace emdarts::testing
