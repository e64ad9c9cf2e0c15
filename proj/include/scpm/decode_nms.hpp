#ifndef SCPM_DECODE_NMS_HPP
#define SCPM_DECODE_NMS_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "scpm/geometry.hpp"
#include "scpm/grid.hpp"

namespace scpm {

struct Candidate {
  Sphere sphere;
  double score = 0.0;
  int level = 1;
  // Linear index of the source cell; ranks equal-score candidates.
  std::size_t cell = 0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Strict total order: score descending, then source cell, level, and the
// sphere parameters ascending.
bool ranks_before(const Candidate& a, const Candidate& b);

void sort_candidates(std::vector<Candidate>& candidates);

struct NmsParams {
  double tau_siou = 0.05;
  double tau_dr = 0.5;
};

// World sphere at (x + 0.5 + v) R with radius M_R R. Empty when the decoded
// radius is not positive. Throws std::out_of_range for a cell outside dims.
std::optional<Candidate> decode_cell(const PredictionGrid& grid, const Cell& cell);

struct TopNResult {
  std::vector<Candidate> candidates;
  std::size_t dropped_nonpositive_radius = 0;
};

// Decodes the n most probable cells (ties by ascending index), sorted by
// ranks_before.
TopNResult top_n_candidates(const PredictionGrid& grid, std::size_t n);

std::vector<Candidate> merge_levels(std::vector<Candidate> a, std::span<const Candidate> b);

// True when `other` duplicates `kept`: SIoU above tau_siou or distance-radius
// ratio below tau_dr.
bool suppresses(const Candidate& kept, const Candidate& other, const NmsParams& params);

/// Greedy SIoU++ non-maximum suppression.
///
/// Repeatedly keeps the best remaining candidate and drops every remaining
/// candidate it suppresses. The result is in ranks_before order.
std::vector<Candidate> nms_siou(std::vector<Candidate> candidates, const NmsParams& params = {});

}  // namespace scpm

#endif  // SCPM_DECODE_NMS_HPP
