#include "scpm/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace scpm {

std::size_t LabelAssignment::count(Label label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

std::vector<std::size_t> LabelAssignment::positives_of(int nodule) const {
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == Label::positive && matched[i] == nodule) cells.push_back(i);
  }
  return cells;
}

std::vector<double> distance_map(const GridSpec& grid, const Point3& centroid) {
  grid.validate();
  std::vector<double> out(grid.cell_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Point3 c = grid.cell_center(i);
    const double dx = c.x - centroid.x;
    const double dy = c.y - centroid.y;
    const double dz = c.z - centroid.z;
    out[i] = std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return out;
}

LabelAssignment assign_labels(const GridSpec& grid, std::span<const NoduleAnnotation> nodules,
                              const MatchingParams& params) {
  grid.validate();
  const std::size_t cells = grid.cell_count();
  if (params.top_k < 1) throw std::invalid_argument("K must be >= 1");
  if (static_cast<std::size_t>(params.top_k) > cells) {
    throw std::invalid_argument("K=" + std::to_string(params.top_k) + " exceeds grid cell count " +
                                std::to_string(cells));
  }

  LabelAssignment out;
  out.grid = grid;
  out.labels.assign(cells, Label::negative);
  out.matched.assign(cells, -1);
  out.radius_target.assign(cells, 0.0);
  out.offset_target.assign(cells, Vec3{});

  std::vector<std::size_t> order(cells);
  for (std::size_t g = 0; g < nodules.size(); ++g) {
    const NoduleAnnotation& nodule = nodules[g];
    const std::vector<double> dist = distance_map(grid, nodule.center);

    order.clear();
    for (std::size_t i = 0; i < cells; ++i) {
      if (out.labels[i] != Label::positive) order.push_back(i);
    }
    const std::size_t take = std::min<std::size_t>(params.top_k, order.size());
    auto nearer = [&](std::size_t a, std::size_t b) {
      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                      order.end(), nearer);
    for (std::size_t k = 0; k < take; ++k) {
      out.labels[order[k]] = Label::positive;
      out.matched[order[k]] = static_cast<int>(g);
    }

    const double ring = nodule.radius + params.ignore_margin_cells * grid.stride;
    for (std::size_t i = 0; i < cells; ++i) {
      if (out.labels[i] == Label::negative && dist[i] <= ring) out.labels[i] = Label::ignored;
    }
  }
  return out;
}

std::size_t ohem_quota(std::size_t positive_count, int ratio) {
  return positive_count > 0 ? static_cast<std::size_t>(ratio) * positive_count : 100;
}

LabelAssignment ohem_refine(LabelAssignment assignment, std::span<const double> per_cell_cls_loss,
                            int ratio) {
  if (ratio < 1) throw std::invalid_argument("OHEM ratio n must be >= 1");
  if (per_cell_cls_loss.size() != assignment.labels.size()) {
    throw std::invalid_argument("loss map does not match grid cell count");
  }
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
    if (assignment.labels[i] != Label::negative) continue;
    if (!std::isfinite(per_cell_cls_loss[i])) {
      throw std::invalid_argument("non-finite classification loss at negative cell " +
                                  std::to_string(i));
    }
    negatives.push_back(i);
  }
  const std::size_t keep =
      std::min(ohem_quota(assignment.positive_count(), ratio), negatives.size());
  auto harder = [&](std::size_t a, std::size_t b) {
    return per_cell_cls_loss[a] > per_cell_cls_loss[b] ||
           (per_cell_cls_loss[a] == per_cell_cls_loss[b] && a < b);
  };
  std::partial_sort(negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(keep),
                    negatives.end(), harder);
  for (std::size_t k = keep; k < negatives.size(); ++k) {
    assignment.labels[negatives[k]] = Label::ignored;
  }
  return assignment;
}

LabelAssignment regression_targets(LabelAssignment assignment,
                                   std::span<const NoduleAnnotation> nodules) {
  const GridSpec& grid = assignment.grid;
  const double stride = grid.stride;
  for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
    if (assignment.labels[i] != Label::positive) continue;
    const int g = assignment.matched[i];
    if (g < 0 || static_cast<std::size_t>(g) >= nodules.size()) {
      throw std::invalid_argument("positive cell " + std::to_string(i) +
                                  " has no matched nodule");
    }
    const NoduleAnnotation& nodule = nodules[static_cast<std::size_t>(g)];
    const Cell c = grid.cell_at(i);
    assignment.offset_target[i] = {nodule.center.x / stride - (c.x + 0.5),
                                   nodule.center.y / stride - (c.y + 0.5),
                                   nodule.center.z / stride - (c.z + 0.5)};
    assignment.radius_target[i] = nodule.radius / stride;
  }
  return assignment;
}

}  // namespace scpm
