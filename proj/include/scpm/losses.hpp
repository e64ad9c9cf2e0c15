#ifndef SCPM_LOSSES_HPP
#define SCPM_LOSSES_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "scpm/geometry.hpp"
#include "scpm/grid.hpp"
#include "scpm/matching.hpp"

namespace scpm {

enum class SphereLossKind : std::uint8_t { box_iou, siou, sdiou, siou_pp };

const char* to_string(SphereLossKind kind);
// Accepts "BoxIoU", "SIoU", "SDIoU", "SIoUpp" (case-insensitive, "SIoU++" too).
std::optional<SphereLossKind> parse_loss_kind(std::string_view name);

/// Partial derivatives of a sphere loss w.r.t. the predicted sphere.
///
/// `near_boundary` is set when the center distance lies within 1e-9 of a
/// regime boundary (d = ra + rb or d = |ra - rb|). The loss is not
/// differentiable there and the values are the one-sided derivatives of
/// the regime the prediction was classified into.
struct SphereGradient {
  double d_cx = 0.0;
  double d_cy = 0.0;
  double d_cz = 0.0;
  double d_r = 0.0;
  bool near_boundary = false;
};

/// Sphere regression losses.
///
///   SIoU    1 - SIoU
///   SDIoU   1 + R_DR - SIoU
///   SIoUpp  R_DR when disjoint, else 1 + R_DR - SIoU + eta
///   BoxIoU  1 - IoU of the axis-aligned cubes inscribed in each sphere
///           (half side r / sqrt(3)); disjoint spheres give disjoint cubes.
double sphere_loss(SphereLossKind kind, const Sphere& pred, const Sphere& gt);

// Forward-mode derivative of sphere_loss w.r.t. pred's center and radius.
SphereGradient sphere_loss_gradient(SphereLossKind kind, const Sphere& pred, const Sphere& gt);

struct FocalParams {
  double alpha = 0.375;
  double gamma = 2.0;
  double t = 0.9;
  double w = 4.0;
};

inline constexpr double kProbabilityEps = 1e-7;

// -alpha (1 - p_t)^gamma log(p_t), with p_t = p for positives and 1 - p
// otherwise; p is clamped to [eps, 1 - eps] first.
double focal_term(double p, bool positive, const FocalParams& params);

/// Re-focal classification loss summed over the non-ignored cells.
///
/// Positives weigh 1 when p >= t and `w` when p < t; negatives weigh 1.
/// Throws std::invalid_argument on a size mismatch or a probability that is
/// not in [0, 1].
double refocal_loss(std::span<const double> probabilities, const LabelAssignment& assignment,
                    const FocalParams& params = {});

// Per-cell loss each cell would incur as a negative; the ranking key for OHEM.
std::vector<double> negative_loss_map(std::span<const double> probabilities,
                                      const FocalParams& params = {});

inline constexpr double kDefaultSmoothL1Beta = 1.0 / 9.0;

// Smooth-L1 as printed: 0.5 (r - r*)^2 / beta below beta, |r - r*| above.
// The two branches do not meet at |r - r*| = beta.
double radius_loss(double r, double r_star, double beta = kDefaultSmoothL1Beta);

double offset_loss(const Vec3& f, const Vec3& f_star);

struct LossBreakdown {
  double cls = 0.0;
  double radius = 0.0;
  double offset = 0.0;
  double siou_pp = 0.0;
  double total = 0.0;
};

struct TotalLossParams {
  FocalParams focal;
  double lambda_s = 2.0;
  double beta = kDefaultSmoothL1Beta;
};

/// Classification loss over non-ignored cells plus, at positive cells only,
/// radius + offset + lambda_s * SIoU++ of the decoded sphere against its
/// matched nodule.
///
/// `assignment` must carry regression targets. Throws std::invalid_argument
/// on shape mismatch or a positive cell without a matched nodule.
LossBreakdown total_loss(const PredictionGrid& prediction, const LabelAssignment& assignment,
                         std::span<const NoduleAnnotation> nodules,
                         const TotalLossParams& params = {});

}  // namespace scpm

#endif  // SCPM_LOSSES_HPP
