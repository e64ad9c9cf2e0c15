#include "scpm/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

#include "scpm/detail/sphere_kernel.hpp"

namespace scpm {
namespace {

using detail::SphereT;

template <class T>
T box_iou_loss(const SphereT<T>& a, const SphereT<T>& b) {
  const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
  const T sa = a.r * inv_sqrt3;
  const T sb = b.r * inv_sqrt3;
  auto overlap = [&](const T& ca, const T& cb) {
    return detail::min_d(ca + sa, cb + sb) - detail::max_d(ca - sa, cb - sb);
  };
  const T ox = overlap(a.x, b.x);
  const T oy = overlap(a.y, b.y);
  const T oz = overlap(a.z, b.z);
  if (detail::value(ox) <= 0.0 || detail::value(oy) <= 0.0 || detail::value(oz) <= 0.0) {
    return T(1.0);
  }
  const T inter = ox * oy * oz;
  const T va = 8.0 * sa * sa * sa;
  const T vb = 8.0 * sb * sb * sb;
  return 1.0 - inter / (va + vb - inter);
}

template <class T>
T loss_kernel(SphereLossKind kind, const SphereT<T>& pred, const SphereT<T>& gt) {
  if (kind == SphereLossKind::box_iou) return box_iou_loss(pred, gt);

  const T d = detail::distance(pred, gt);
  const T& ra = pred.r;
  const T& rb = gt.r;
  switch (kind) {
    case SphereLossKind::siou:
      return 1.0 - detail::siou(d, ra, rb);
    case SphereLossKind::sdiou:
      return 1.0 + detail::distance_radius_ratio(d, ra, rb) - detail::siou(d, ra, rb);
    case SphereLossKind::siou_pp: {
      const T rdr = detail::distance_radius_ratio(d, ra, rb);
      if (!(detail::value(ra) + detail::value(rb) > detail::value(d))) return rdr;
      return 1.0 + rdr - detail::siou(d, ra, rb) + detail::angle_score(d, ra, rb);
    }
    case SphereLossKind::box_iou:
      break;
  }
  return T(0.0);
}

SphereT<double> plain(const Sphere& s) { return {s.center.x, s.center.y, s.center.z, s.radius}; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

double clamp_probability(double p) {
  return std::clamp(p, kProbabilityEps, 1.0 - kProbabilityEps);
}

void check_probability(double p, std::size_t cell) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("probability outside [0, 1] at cell " + std::to_string(cell));
  }
}

}  // namespace

const char* to_string(SphereLossKind kind) {
  switch (kind) {
    case SphereLossKind::box_iou: return "BoxIoU";
    case SphereLossKind::siou: return "SIoU";
    case SphereLossKind::sdiou: return "SDIoU";
    case SphereLossKind::siou_pp: return "SIoUpp";
  }
  return "unknown";
}

std::optional<SphereLossKind> parse_loss_kind(std::string_view name) {
  const std::string n = lowercase(name);
  if (n == "boxiou" || n == "iou") return SphereLossKind::box_iou;
  if (n == "siou") return SphereLossKind::siou;
  if (n == "sdiou") return SphereLossKind::sdiou;
  if (n == "sioupp" || n == "siou++") return SphereLossKind::siou_pp;
  return std::nullopt;
}

double sphere_loss(SphereLossKind kind, const Sphere& pred, const Sphere& gt) {
  return loss_kernel(kind, plain(pred), plain(gt));
}

SphereGradient sphere_loss_gradient(SphereLossKind kind, const Sphere& pred, const Sphere& gt) {
  using D = detail::Dual<4>;
  const SphereT<D> p{D::variable(pred.center.x, 0), D::variable(pred.center.y, 1),
                     D::variable(pred.center.z, 2), D::variable(pred.radius, 3)};
  const SphereT<D> g{D(gt.center.x), D(gt.center.y), D(gt.center.z), D(gt.radius)};
  const D loss = loss_kernel(kind, p, g);

  SphereGradient out{loss.g[0], loss.g[1], loss.g[2], loss.g[3], false};
  const double d = center_distance(pred, gt);
  constexpr double kBoundaryTol = 1e-9;
  out.near_boundary = std::abs(d - (pred.radius + gt.radius)) <= kBoundaryTol ||
                      std::abs(d - std::abs(pred.radius - gt.radius)) <= kBoundaryTol;
  return out;
}

double focal_term(double p, bool positive, const FocalParams& params) {
  const double pc = clamp_probability(p);
  const double pt = positive ? pc : 1.0 - pc;
  return -params.alpha * std::pow(1.0 - pt, params.gamma) * std::log(pt);
}

double refocal_loss(std::span<const double> probabilities, const LabelAssignment& assignment,
                    const FocalParams& params) {
  if (probabilities.size() != assignment.labels.size()) {
    throw std::invalid_argument("probability map does not match assignment grid");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const Label label = assignment.labels[i];
    if (label == Label::ignored) continue;
    const double p = probabilities[i];
    check_probability(p, i);
    if (label == Label::positive) {
      const double weight = p < params.t ? params.w : 1.0;
      sum += weight * focal_term(p, true, params);
    } else {
      sum += focal_term(p, false, params);
    }
  }
  return sum;
}

std::vector<double> negative_loss_map(std::span<const double> probabilities,
                                      const FocalParams& params) {
  std::vector<double> out(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    check_probability(probabilities[i], i);
    out[i] = focal_term(probabilities[i], false, params);
  }
  return out;
}

double radius_loss(double r, double r_star, double beta) {
  const double diff = std::abs(r - r_star);
  if (diff < beta) return 0.5 * diff * diff / beta;
  return diff;
}

double offset_loss(const Vec3& f, const Vec3& f_star) { return norm(f - f_star); }

LossBreakdown total_loss(const PredictionGrid& prediction, const LabelAssignment& assignment,
                         std::span<const NoduleAnnotation> nodules,
                         const TotalLossParams& params) {
  prediction.validate();
  if (!(prediction.spec == assignment.grid) ||
      assignment.labels.size() != prediction.spec.cell_count()) {
    throw std::invalid_argument("prediction grid and assignment disagree on shape");
  }

  LossBreakdown out;
  out.cls = refocal_loss(prediction.center_prob, assignment, params.focal);

  const GridSpec& grid = prediction.spec;
  const double stride = grid.stride;
  for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
    if (assignment.labels[i] != Label::positive) continue;
    const int g = assignment.matched[i];
    if (g < 0 || static_cast<std::size_t>(g) >= nodules.size()) {
      throw std::invalid_argument("positive cell " + std::to_string(i) +
                                  " lacks a matched ground-truth sphere");
    }
    out.radius += radius_loss(prediction.radius[i], assignment.radius_target[i], params.beta);
    out.offset += offset_loss(prediction.offset[i], assignment.offset_target[i]);

    const Cell c = grid.cell_at(i);
    const Vec3& v = prediction.offset[i];
    // A nonpositive radius has no sphere; the smallest positive one stands in.
    const Sphere pred{{(c.x + 0.5 + v.x) * stride, (c.y + 0.5 + v.y) * stride,
                       (c.z + 0.5 + v.z) * stride},
                      std::max(prediction.radius[i] * stride, 1e-6)};
    out.siou_pp +=
        sphere_loss(SphereLossKind::siou_pp, pred, nodules[static_cast<std::size_t>(g)].sphere());
  }
  out.total = out.cls + (out.radius + out.offset + params.lambda_s * out.siou_pp);
  return out;
}

}  // namespace scpm
