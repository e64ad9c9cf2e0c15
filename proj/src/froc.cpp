#include "scpm/froc.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace scpm {

bool is_hit(const Candidate& candidate, const NoduleAnnotation& annotation) {
  return norm(candidate.sphere.center - annotation.center) <= annotation.radius;
}

HitMatch match_hits(const ScanResult& result) {
  const auto& cands = result.candidates;
  const auto& notes = result.annotations;
  HitMatch out;
  out.candidates.assign(cands.size(), HitLabel::false_positive);
  out.annotations.assign(notes.size(), AnnotationOutcome{});

  for (std::size_t c = 0; c < cands.size(); ++c) {
    for (std::size_t a = 0; a < notes.size(); ++a) {
      if (!is_hit(cands[c], notes[a])) continue;
      out.candidates[c] = HitLabel::ignored;
      AnnotationOutcome& o = out.annotations[a];
      if (!o.detected || ranks_before(cands[c], cands[o.candidate])) {
        o.detected = true;
        o.score = cands[c].score;
        o.candidate = c;
      }
    }
  }
  for (const AnnotationOutcome& o : out.annotations) {
    if (o.detected) out.candidates[o.candidate] = HitLabel::true_positive;
  }
  return out;
}

FrocCurve froc(std::span<const ScanResult> results) {
  if (results.empty()) throw std::invalid_argument("FROC needs at least one scan");

  std::vector<double> tp_scores;
  std::vector<double> fp_scores;
  std::size_t total = 0;
  for (const ScanResult& scan : results) {
    const HitMatch m = match_hits(scan);
    total += scan.annotations.size();
    for (const AnnotationOutcome& o : m.annotations) {
      if (o.detected) tp_scores.push_back(o.score);
    }
    for (std::size_t c = 0; c < m.candidates.size(); ++c) {
      if (m.candidates[c] == HitLabel::false_positive) fp_scores.push_back(scan.candidates[c].score);
    }
  }
  if (total == 0) throw std::invalid_argument("FROC sensitivity undefined without annotations");

  std::sort(tp_scores.begin(), tp_scores.end(), std::greater<>());
  std::sort(fp_scores.begin(), fp_scores.end(), std::greater<>());
  std::vector<double> thresholds(tp_scores);
  thresholds.insert(thresholds.end(), fp_scores.begin(), fp_scores.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  // Sweep thresholds from high to low; counts only grow.
  struct Step {
    std::size_t fps;
    std::size_t tps;
  };
  std::vector<Step> steps{{0, 0}};
  std::size_t ti = 0;
  std::size_t fi = 0;
  for (double th : thresholds) {
    while (ti < tp_scores.size() && tp_scores[ti] >= th) ++ti;
    while (fi < fp_scores.size() && fp_scores[fi] >= th) ++fi;
    steps.push_back({fi, ti});
  }

  const double scans = static_cast<double>(results.size());
  FrocCurve curve;
  double sum = 0.0;
  for (std::size_t k = 0; k < kFrocOperatingPoints.size(); ++k) {
    const double f = kFrocOperatingPoints[k];
    std::size_t best = 0;
    for (const Step& s : steps) {
      if (static_cast<double>(s.fps) / scans <= f) best = std::max(best, s.tps);
    }
    const double sens = static_cast<double>(best) / static_cast<double>(total);
    curve.points[k] = {f, sens};
    sum += sens;
  }
  curve.average = sum / static_cast<double>(kFrocOperatingPoints.size());
  return curve;
}

}  // namespace scpm
