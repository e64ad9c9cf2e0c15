#include "scpm/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace scpm {

std::size_t GridSpec::cell_count() const {
  return static_cast<std::size_t>(dims.depth) * static_cast<std::size_t>(dims.height) *
         static_cast<std::size_t>(dims.width);
}

std::size_t GridSpec::linear(const Cell& c) const {
  return (static_cast<std::size_t>(c.z) * static_cast<std::size_t>(dims.height) +
          static_cast<std::size_t>(c.y)) *
             static_cast<std::size_t>(dims.width) +
         static_cast<std::size_t>(c.x);
}

Cell GridSpec::cell_at(std::size_t index) const {
  const auto w = static_cast<std::size_t>(dims.width);
  const auto h = static_cast<std::size_t>(dims.height);
  return {static_cast<int>(index / (w * h)), static_cast<int>((index / w) % h),
          static_cast<int>(index % w)};
}

bool GridSpec::contains(const Cell& c) const {
  return c.z >= 0 && c.y >= 0 && c.x >= 0 && c.z < dims.depth && c.y < dims.height &&
         c.x < dims.width;
}

Point3 GridSpec::cell_center(const Cell& c) const {
  const double r = stride;
  return {(c.x + 0.5) * r, (c.y + 0.5) * r, (c.z + 0.5) * r};
}

void GridSpec::validate() const {
  if (dims.depth < 1 || dims.height < 1 || dims.width < 1) {
    throw std::invalid_argument("grid extents must be >= 1");
  }
  if (stride < 1) throw std::invalid_argument("grid stride must be >= 1");
}

PredictionGrid PredictionGrid::zeros(const GridSpec& spec, int level) {
  spec.validate();
  PredictionGrid g;
  g.spec = spec;
  g.level = level;
  g.center_prob.assign(spec.cell_count(), 0.0);
  g.radius.assign(spec.cell_count(), 0.0);
  g.offset.assign(spec.cell_count(), Vec3{});
  return g;
}

void PredictionGrid::validate() const {
  spec.validate();
  const std::size_t n = spec.cell_count();
  if (center_prob.size() != n || radius.size() != n || offset.size() != n) {
    throw std::invalid_argument("prediction maps do not match grid dims (" + std::to_string(n) +
                                " cells)");
  }
  for (double p : center_prob) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("center probability outside [0, 1]");
  }
}

}  // namespace scpm
