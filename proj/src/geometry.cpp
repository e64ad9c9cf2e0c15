#include "scpm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "scpm/detail/sphere_kernel.hpp"

namespace scpm {

double norm(const Point3& p) { return std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z); }

const char* to_string(OverlapRegime regime) {
  switch (regime) {
    case OverlapRegime::disjoint: return "disjoint";
    case OverlapRegime::intersecting: return "intersecting";
    case OverlapRegime::contained: return "contained";
  }
  return "unknown";
}

double center_distance(const Sphere& a, const Sphere& b) { return norm(a.center - b.center); }

OverlapRegime classify_overlap(double d, double ra, double rb) {
  if (d >= ra + rb) return OverlapRegime::disjoint;
  if (d + std::min(ra, rb) <= std::max(ra, rb)) return OverlapRegime::contained;
  return OverlapRegime::intersecting;
}

OverlapGeometry overlap_geometry(const Sphere& a, const Sphere& b) {
  const double ra = a.radius;
  const double rb = b.radius;
  OverlapGeometry g;
  g.d_ab = center_distance(a, b);
  g.regime = classify_overlap(g.d_ab, ra, rb);
  g.cos_phi_ab = std::clamp(detail::cos_phi_ab(g.d_ab, ra, rb), -1.0, 1.0);
  if (g.d_ab > 0.0) {
    const double d = g.d_ab;
    g.cos_phi_a = std::clamp((ra * ra + d * d - rb * rb) / (2.0 * ra * d), -1.0, 1.0);
    g.cos_phi_b = std::clamp((rb * rb + d * d - ra * ra) / (2.0 * rb * d), -1.0, 1.0);
  }
  if (g.regime == OverlapRegime::intersecting) {
    g.h1 = detail::cap_height(g.d_ab, rb, ra);
    g.h2 = detail::cap_height(g.d_ab, ra, rb);
  }
  return g;
}

double intersection_volume(const Sphere& a, const Sphere& b) {
  const double d = center_distance(a, b);
  return detail::intersection(d, a.radius, b.radius, classify_overlap(d, a.radius, b.radius));
}

double union_volume(const Sphere& a, const Sphere& b) {
  return detail::union_of(a.radius, b.radius, intersection_volume(a, b));
}

double siou(const Sphere& a, const Sphere& b) {
  return detail::siou(center_distance(a, b), a.radius, b.radius);
}

double distance_radius_ratio(const Sphere& a, const Sphere& b) {
  return detail::distance_radius_ratio(center_distance(a, b), a.radius, b.radius);
}

double angle_score(const Sphere& a, const Sphere& b) {
  return detail::angle_score(center_distance(a, b), a.radius, b.radius);
}

double mc_intersection_volume(const Sphere& a, const Sphere& b, std::uint64_t samples,
                              std::uint64_t seed) {
  const Sphere& small = a.radius <= b.radius ? a : b;
  const Sphere& other = a.radius <= b.radius ? b : a;
  if (samples == 0 || center_distance(a, b) >= a.radius + b.radius) return 0.0;

  constexpr int kBits = 21;
  constexpr std::uint64_t kMask = (std::uint64_t{1} << kBits) - 1;
  // Cell-centered lattice coordinate in [-1, 1).
  const double scale = 2.0 / static_cast<double>(std::uint64_t{1} << kBits);

  const double rs = small.radius;
  const double rs2 = 1.0;  // inside the small sphere in its normalized frame
  const Point3 off = (other.center - small.center) * (1.0 / rs);
  const double ro = other.radius / rs;
  const double ro2 = ro * ro;

  std::mt19937_64 rng(seed);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const std::uint64_t w = rng();
    const double u = (static_cast<double>(w & kMask) + 0.5) * scale - 1.0;
    const double v = (static_cast<double>((w >> kBits) & kMask) + 0.5) * scale - 1.0;
    const double s = (static_cast<double>((w >> (2 * kBits)) & kMask) + 0.5) * scale - 1.0;
    const double du = u - off.x;
    const double dv = v - off.y;
    const double ds = s - off.z;
    // branch-free: the two tests are unpredictable
    hits += static_cast<std::uint64_t>((u * u + v * v + s * s <= rs2) &
                                       (du * du + dv * dv + ds * ds <= ro2));
  }
  const double cube = 8.0 * rs * rs * rs;
  return cube * static_cast<double>(hits) / static_cast<double>(samples);
}

}  // namespace scpm
