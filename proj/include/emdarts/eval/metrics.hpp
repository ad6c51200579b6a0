#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace emdarts::eval {

// Similarity scores of same-subject (genuine) and cross-subject (impostor) pairs.
struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

// A pair is accepted when score >= threshold.
//   FAR(t) = impostors accepted / impostors, FRR(t) = genuines rejected / genuines.
struct OperatingPoint {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
};

struct EerResult {
  double eer = 0.0;  // (FAR + FRR) / 2 at the chosen threshold
  OperatingPoint point;
};

// Sweeps every distinct score as a threshold and keeps the one minimising
// |FAR - FRR|; ties go to the lower threshold. InputError if either list is empty.
EerResult compute_eer(const ScoreSet& s);

struct FrrAtFar {
  double target = 0.0;
  OperatingPoint point;
  bool insufficient = false;  // fewer than 1/target impostors
};

inline constexpr double kDefaultFarTargets[] = {1e-1, 1e-2, 1e-3};

// Smallest threshold among the distinct scores and +inf with FAR <= target.
std::vector<FrrAtFar> frr_at_far(const ScoreSet& s, std::span<const double> targets = kDefaultFarTargets);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct PrPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

struct Curves {
  std::vector<RocPoint> roc;  // from (0,0) at +inf down to (1,1)
  std::vector<PrPoint> pr;    // one per distinct threshold, descending
  double average_precision = 0.0;
};

// AP = sum over descending thresholds of (R_k - R_{k-1}) * P_k.
Curves roc_pr_curves(const ScoreSet& s);

struct EvalReport {
  std::size_t genuine_pairs = 0;
  std::size_t impostor_pairs = 0;
  EerResult eer;
  std::vector<FrrAtFar> frr;
  Curves curves;
};

EvalReport make_report(const ScoreSet& s);

void write_eval_report(const EvalReport& r, std::ostream& out);
void write_roc_csv(const Curves& c, std::ostream& out);
void write_pr_csv(const Curves& c, std::ostream& out);

}  // namespace emdarts::eval
