#ifndef SCPM_FROC_HPP
#define SCPM_FROC_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scpm/decode_nms.hpp"
#include "scpm/matching.hpp"

namespace scpm {

struct ScanResult {
  std::string scan_id;
  std::vector<Candidate> candidates;
  std::vector<NoduleAnnotation> annotations;
};

enum class HitLabel : std::uint8_t { true_positive, false_positive, ignored };

struct AnnotationOutcome {
  bool detected = false;
  // Score and index of the credited candidate when detected.
  double score = 0.0;
  std::size_t candidate = 0;
};

struct HitMatch {
  std::vector<HitLabel> candidates;  // parallel to ScanResult::candidates
  std::vector<AnnotationOutcome> annotations;
};

// A candidate hits an annotation when its center lies within the annotation
// radius (boundary inclusive).
bool is_hit(const Candidate& candidate, const NoduleAnnotation& annotation);

/// Hit matching for one scan.
///
/// Each annotation is credited to its best-ranked hitting candidate, which
/// becomes a true positive. Other candidates that hit some annotation are
/// ignored; candidates hitting nothing are false positives.
HitMatch match_hits(const ScanResult& result);

inline constexpr std::array<double, 7> kFrocOperatingPoints{0.125, 0.25, 0.5, 1.0,
                                                            2.0,   4.0,  8.0};

struct FrocPoint {
  double fps_per_scan = 0.0;
  double sensitivity = 0.0;
};

struct FrocCurve {
  std::array<FrocPoint, 7> points{};
  double average = 0.0;
};

/// Sensitivity at the seven operating points.
///
/// For each operating point f the score threshold is swept over every
/// candidate score (and +inf); the reported sensitivity is the best one among
/// thresholds whose false positives per scan do not exceed f. Candidates
/// at or above a threshold are counted. Throws std::invalid_argument when
/// there are no scans or no annotations.
FrocCurve froc(std::span<const ScanResult> results);

}  // namespace scpm

#endif  // SCPM_FROC_HPP
