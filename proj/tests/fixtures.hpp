// Hand-built inputs shared by unit and acceptance tests.
#ifndef SCPM_TESTS_FIXTURES_HPP
#define SCPM_TESTS_FIXTURES_HPP

#include <vector>

#include "scpm/froc.hpp"

namespace fixture {

inline scpm::Candidate at(double x, double y, double z, double score) {
  return {{{x, y, z}, 2.0}, score, 1, 0};
}

// Four scans with scripted scores: duplicate hits, a candidate inside two
// overlapping annotations, a TP/FP score tie, a scan without nodules and a
// nodule nobody finds.
inline std::vector<scpm::ScanResult> four_scans() {
  using scpm::NoduleAnnotation;
  std::vector<scpm::ScanResult> s(4);
  s[0].scan_id = "scan-a";
  s[0].annotations = {{"a0", {20, 20, 20}, 5}, {"a1", {60, 60, 60}, 4}};
  s[0].candidates = {at(21, 20, 20, 0.95), at(20, 22, 20, 0.90), at(40, 40, 40, 0.85),
                     at(61, 61, 61, 0.40), at(5, 5, 5, 0.30)};

  s[1].scan_id = "scan-b";
  s[1].annotations = {{"b0", {30, 30, 30}, 6}, {"b1", {36, 30, 30}, 6}, {"b2", {80, 10, 10}, 3}};
  s[1].candidates = {at(33, 30, 30, 0.70), at(10, 70, 10, 0.70), at(90, 90, 90, 0.60),
                     at(80, 10, 12, 0.20), at(37, 31, 30, 0.10)};

  s[2].scan_id = "scan-c";
  s[2].candidates = {at(10, 10, 10, 0.99), at(50, 50, 50, 0.50), at(70, 20, 40, 0.05)};

  s[3].scan_id = "scan-d";
  s[3].annotations = {{"d0", {15, 45, 25}, 4}, {"d1", {70, 70, 20}, 5}};
  s[3].candidates = {at(15, 45, 28.5, 0.80), at(15, 45, 29.5, 0.75), at(30, 30, 30, 0.45),
                     at(31, 31, 31, 0.35), at(32, 32, 32, 0.25), at(33, 33, 33, 0.15)};
  return s;
}

}  // namespace fixture

#endif  // SCPM_TESTS_FIXTURES_HPP
