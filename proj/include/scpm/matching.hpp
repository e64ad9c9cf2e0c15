#ifndef SCPM_MATCHING_HPP
#define SCPM_MATCHING_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scpm/geometry.hpp"
#include "scpm/grid.hpp"

namespace scpm {

struct NoduleAnnotation {
  std::string id;
  Point3 center;
  double radius = 1.0;

  Sphere sphere() const { return {center, radius}; }
};

enum class Label : std::uint8_t { negative, positive, ignored };

/// Center-points matching result for one grid.
///
/// `matched` holds the index (into the nodule list given to assign_labels)
/// of the nodule a positive cell belongs to, and -1 elsewhere. The regression
/// targets are in grid units and are meaningful only at positive cells once
/// regression_targets() has run.
struct LabelAssignment {
  GridSpec grid;
  std::vector<Label> labels;
  std::vector<int> matched;
  std::vector<double> radius_target;
  std::vector<Vec3> offset_target;

  std::size_t count(Label label) const;
  std::size_t positive_count() const { return count(Label::positive); }
  // Linear indices of the positive cells matched to `nodule`, ascending.
  std::vector<std::size_t> positives_of(int nodule) const;
};

struct MatchingParams {
  int top_k = 7;
  // Ignore ring: non-positive cells within radius + margin * stride of a
  // centroid.
  double ignore_margin_cells = 2.0;
};

// World distance from every cell center to `centroid`, in linear cell order.
std::vector<double> distance_map(const GridSpec& grid, const Point3& centroid);

/// Positive, ignored and negative labels before hard-negative mining.
///
/// Nodules are processed in list order. Each takes its K nearest cells that
/// are not already positive (ties by ascending linear index); a positive is
/// never demoted, an ignored cell may be promoted by a later nodule.
/// Throws std::invalid_argument when K < 1 or K exceeds the cell count.
LabelAssignment assign_labels(const GridSpec& grid, std::span<const NoduleAnnotation> nodules,
                              const MatchingParams& params = {});

// Number of negatives kept by OHEM: n * M when M > 0, else 100.
std::size_t ohem_quota(std::size_t positive_count, int ratio);

/// Keeps the hardest negatives and resets the rest to ignored.
///
/// `per_cell_cls_loss` is indexed by linear cell; it must be finite on
/// every negative cell. Ties are broken by ascending linear index.
LabelAssignment ohem_refine(LabelAssignment assignment, std::span<const double> per_cell_cls_loss,
                            int ratio = 100);

// Fills offset (centroid / R - (x + 0.5)) and radius (radius / R) targets at
// every positive cell.
LabelAssignment regression_targets(LabelAssignment assignment,
                                   std::span<const NoduleAnnotation> nodules);

}  // namespace scpm

#endif  // SCPM_MATCHING_HPP
