#ifndef SCPM_GEOMETRY_HPP
#define SCPM_GEOMETRY_HPP

#include <cstdint>
#include <numbers>

namespace scpm {

// World voxel coordinates (isotropic 1 mm voxels).
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
};

inline Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Point3 operator*(const Point3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
inline Point3 operator*(double s, const Point3& a) { return a * s; }

double norm(const Point3& p);

// Center and radius in world voxels. radius > 0.
struct Sphere {
  Point3 center;
  double radius = 1.0;

  friend bool operator==(const Sphere&, const Sphere&) = default;
};

inline double sphere_volume(double radius) {
  return 4.0 * std::numbers::pi * radius * radius * radius / 3.0;
}

enum class OverlapRegime : std::uint8_t { disjoint, intersecting, contained };

const char* to_string(OverlapRegime regime);

/// Central-angle cosines and cap heights of two spheres.
///
/// The cosines follow the law of cosines on the triangle formed by the two
/// centers and a point of the intersection circle; they are clamped to
/// [-1, 1]. `h1` is the height of the cap cut from `b`, `h2` the cap cut from
/// `a`. Outside the intersecting regime the cap heights are reported as 0 and
/// the cosines are left at their clamped values (d = 0 gives cos_phi_a =
/// cos_phi_b = 1).
struct OverlapGeometry {
  double d_ab = 0.0;
  double cos_phi_a = 1.0;
  double cos_phi_b = 1.0;
  double cos_phi_ab = 1.0;
  double h1 = 0.0;
  double h2 = 0.0;
  OverlapRegime regime = OverlapRegime::contained;
};

double center_distance(const Sphere& a, const Sphere& b);

// Tangent spheres (d == ra + rb) are disjoint. Identical spheres are contained.
OverlapRegime classify_overlap(double d, double ra, double rb);

OverlapGeometry overlap_geometry(const Sphere& a, const Sphere& b);

double intersection_volume(const Sphere& a, const Sphere& b);

// Sum of both sphere volumes minus the intersection.
double union_volume(const Sphere& a, const Sphere& b);

double siou(const Sphere& a, const Sphere& b);

// d / (d + ra + rb)
double distance_radius_ratio(const Sphere& a, const Sphere& b);

// Normalized intersection angle arccos(cos_phi_ab) / pi; 0 once d > ra + rb.
double angle_score(const Sphere& a, const Sphere& b);

/// Monte-Carlo estimate of the intersection volume.
///
/// Draws `samples` uniform points in the axis-aligned bounding cube of the
/// smaller sphere and scales the hit fraction by the cube volume. Each draw
/// packs three 21-bit coordinates into one 64-bit word of a Mersenne
/// twister seeded with `seed`.
double mc_intersection_volume(const Sphere& a, const Sphere& b, std::uint64_t samples,
                              std::uint64_t seed);

}  // namespace scpm

#endif  // SCPM_GEOMETRY_HPP
