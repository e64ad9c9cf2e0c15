#include "scpm/decode_nms.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace scpm {

bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  const auto key = [](const Candidate& c) {
    return std::tie(c.cell, c.level, c.sphere.center.x, c.sphere.center.y, c.sphere.center.z,
                    c.sphere.radius);
  };
  return key(a) < key(b);
}

void sort_candidates(std::vector<Candidate>& candidates) {
  std::sort(candidates.begin(), candidates.end(), ranks_before);
}

std::optional<Candidate> decode_cell(const PredictionGrid& grid, const Cell& cell) {
  if (!grid.spec.contains(cell)) throw std::out_of_range("cell outside prediction grid");
  const std::size_t i = grid.spec.linear(cell);
  const double stride = grid.spec.stride;
  const double radius = grid.radius[i] * stride;
  if (!(radius > 0.0)) return std::nullopt;
  const Vec3& v = grid.offset[i];
  Candidate c;
  c.sphere = {{(cell.x + 0.5 + v.x) * stride, (cell.y + 0.5 + v.y) * stride,
               (cell.z + 0.5 + v.z) * stride},
              radius};
  c.score = grid.center_prob[i];
  c.level = grid.level;
  c.cell = i;
  return c;
}

TopNResult top_n_candidates(const PredictionGrid& grid, std::size_t n) {
  grid.validate();
  const std::size_t cells = grid.spec.cell_count();
  const std::size_t take = std::min(n, cells);
  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& prob = grid.center_prob;
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return prob[a] > prob[b] || (prob[a] == prob[b] && a < b);
                    });

  TopNResult out;
  for (std::size_t k = 0; k < take; ++k) {
    if (auto c = decode_cell(grid, grid.spec.cell_at(order[k]))) {
      out.candidates.push_back(*c);
    } else {
      ++out.dropped_nonpositive_radius;
    }
  }
  sort_candidates(out.candidates);
  return out;
}

std::vector<Candidate> merge_levels(std::vector<Candidate> a, std::span<const Candidate> b) {
  a.insert(a.end(), b.begin(), b.end());
  sort_candidates(a);
  return a;
}

bool suppresses(const Candidate& kept, const Candidate& other, const NmsParams& params) {
  return siou(kept.sphere, other.sphere) > params.tau_siou ||
         distance_radius_ratio(kept.sphere, other.sphere) < params.tau_dr;
}

std::vector<Candidate> nms_siou(std::vector<Candidate> candidates, const NmsParams& params) {
  sort_candidates(candidates);
  std::vector<Candidate> kept;
  for (const Candidate& c : candidates) {
    const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const Candidate& k) {
      return suppresses(k, c, params);
    });
    if (!duplicate) kept.push_back(c);
  }
  return kept;
}

}  // namespace scpm
