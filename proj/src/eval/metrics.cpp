#include "emdarts/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <limits>
#include <ostream>
#include <string>

#include "emdarts/error.hpp"

namespace emdarts::eval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_scores(const ScoreSet& s) {
  if (s.genuine.empty()) throw InputError("no genuine scores");
  if (s.impostor.empty()) throw InputError("no impostor scores");
  for (const auto* list : {&s.genuine, &s.impostor}) {
    for (double v : *list) {
      if (!std::isfinite(v)) throw NumericalError("non-finite similarity score");
    }
  }
}

// Counts of accepted genuine/impostor pairs at each distinct threshold,
// thresholds ascending.
struct Sweep {
  std::vector<double> thresholds;
  std::vector<std::size_t> genuine_accepted;
  std::vector<std::size_t> impostor_accepted;
  std::size_t n_genuine = 0;
  std::size_t n_impostor = 0;

  double far(std::size_t k) const {
    return static_cast<double>(impostor_accepted[k]) / static_cast<double>(n_impostor);
  }
  double frr(std::size_t k) const {
    return static_cast<double>(n_genuine - genuine_accepted[k]) / static_cast<double>(n_genuine);
  }
};

Sweep sweep(const ScoreSet& s) {
  Sweep out;
  std::vector<double> g = s.genuine, im = s.impostor;
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  out.n_genuine = g.size();
  out.n_impostor = im.size();
  std::vector<double> all;
  all.reserve(g.size() + im.size());
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(all));
  all.erase(std::unique(all.begin(), all.end()), all.end());
  out.thresholds = all;
  std::size_t gi = 0, ii = 0;
  for (double t : all) {
    while (gi < g.size() && g[gi] < t) ++gi;
    while (ii < im.size() && im[ii] < t) ++ii;
    out.genuine_accepted.push_back(g.size() - gi);
    out.impostor_accepted.push_back(im.size() - ii);
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

EerResult compute_eer(const ScoreSet& s) {
  require_scores(s);
  const Sweep sw = sweep(s);
  std::size_t best = 0;
  double best_gap = kInf;
  for (std::size_t k = 0; k < sw.thresholds.size(); ++k) {
    const double gap = std::fabs(sw.far(k) - sw.frr(k));
    if (gap < best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  EerResult r;
  r.point = {sw.thresholds[best], sw.far(best), sw.frr(best)};
  r.eer = 0.5 * (r.point.far + r.point.frr);
  return r;
}

std::vector<FrrAtFar> frr_at_far(const ScoreSet& s, std::span<const double> targets) {
  require_scores(s);
  const Sweep sw = sweep(s);
  std::vector<FrrAtFar> out;
  for (double target : targets) {
    FrrAtFar f;
    f.target = target;
    f.insufficient = static_cast<double>(sw.n_impostor) * target < 1.0;
    f.point = {kInf, 0.0, 1.0};
    // FAR is non-increasing in t, so the first hit ascending is the smallest.
    for (std::size_t k = 0; k < sw.thresholds.size(); ++k) {
      if (sw.far(k) <= target) {
        f.point = {sw.thresholds[k], sw.far(k), sw.frr(k)};
        break;
      }
    }
    out.push_back(f);
  }
  return out;
}

Curves roc_pr_curves(const ScoreSet& s) {
  require_scores(s);
  const Sweep sw = sweep(s);
  Curves c;
  c.roc.push_back({kInf, 0.0, 0.0});
  double prev_recall = 0.0;
  for (std::size_t k = sw.thresholds.size(); k-- > 0;) {
    const double tp = static_cast<double>(sw.genuine_accepted[k]);
    const double fp = static_cast<double>(sw.impostor_accepted[k]);
    const double recall = tp / static_cast<double>(sw.n_genuine);
    const double fpr = fp / static_cast<double>(sw.n_impostor);
    const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 1.0;
    c.roc.push_back({sw.thresholds[k], fpr, recall});
    c.pr.push_back({sw.thresholds[k], recall, precision});
    c.average_precision += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return c;
}

EvalReport make_report(const ScoreSet& s) {
  EvalReport r;
  r.genuine_pairs = s.genuine.size();
  r.impostor_pairs = s.impostor.size();
  r.eer = compute_eer(s);
  r.frr = frr_at_far(s);
  r.curves = roc_pr_curves(s);
  return r;
}

void write_eval_report(const EvalReport& r, std::ostream& out) {
  out << "genuine_pairs " << r.genuine_pairs << '\n';
  out << "impostor_pairs " << r.impostor_pairs << '\n';
  out << "eer " << fmt(r.eer.eer) << '\n';
  out << "threshold_at_eer " << fmt(r.eer.point.threshold) << '\n';
  out << "far_at_eer " << fmt(r.eer.point.far) << '\n';
  out << "frr_at_eer " << fmt(r.eer.point.frr) << '\n';
  for (const auto& f : r.frr) {
    out << "frr_at_far " << fmt(f.target) << ' ' << fmt(f.point.frr) << " threshold " << fmt(f.point.threshold);
    if (f.insufficient) out << " insufficient_impostors";
    out << '\n';
  }
  out << "average_precision " << fmt(r.curves.average_precision) << '\n';
  out << "roc_points " << r.curves.roc.size() << '\n';
  out << "pr_points " << r.curves.pr.size() << '\n';
}

void write_roc_csv(const Curves& c, std::ostream& out) {
  out << "threshold,fpr,tpr\n";
  for (const auto& p : c.roc) out << fmt(p.threshold) << ',' << fmt(p.fpr) << ',' << fmt(p.tpr) << '\n';
}

void write_pr_csv(const Curves& c, std::ostream& out) {
  out << "threshold,recall,precision\n";
  for (const auto& p : c.pr) out << fmt(p.threshold) << ',' << fmt(p.recall) << ',' << fmt(p.precision) << '\n';
}

}  // namespace emdarts::eval
