#ifndef SCPM_GRID_HPP
#define SCPM_GRID_HPP

#include <cstddef>
#include <vector>

#include "scpm/geometry.hpp"

namespace scpm {

using Vec3 = Point3;

// Extents of a downsampled grid along z, y, x.
struct GridDims {
  int depth = 1;
  int height = 1;
  int width = 1;

  friend bool operator==(const GridDims&, const GridDims&) = default;
};

struct Cell {
  int z = 0;
  int y = 0;
  int x = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Shape of a prediction grid and its stride (world voxels per cell).
///
/// Cells are linearized z-major, then y, then x. The world position of cell
/// (z, y, x) is ((x + 0.5) R, (y + 0.5) R, (z + 0.5) R).
struct GridSpec {
  GridDims dims;
  int stride = 1;

  std::size_t cell_count() const;
  std::size_t linear(const Cell& c) const;
  Cell cell_at(std::size_t index) const;
  bool contains(const Cell& c) const;
  Point3 cell_center(const Cell& c) const;
  Point3 cell_center(std::size_t index) const { return cell_center(cell_at(index)); }

  // Throws std::invalid_argument when an extent or the stride is < 1.
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Per-cell network outputs at one resolution level.
///
/// `radius` and `offset` are in grid units; `offset` holds the (x, y, z)
/// channels of the offset map.
struct PredictionGrid {
  GridSpec spec;
  int level = 1;
  std::vector<double> center_prob;
  std::vector<double> radius;
  std::vector<Vec3> offset;

  static PredictionGrid zeros(const GridSpec& spec, int level = 1);

  // Map sizes must match spec; probabilities must lie in [0, 1].
  void validate() const;
};

}  // namespace scpm

#endif  // SCPM_GRID_HPP
