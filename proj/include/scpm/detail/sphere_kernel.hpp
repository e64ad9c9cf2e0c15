#ifndef SCPM_DETAIL_SPHERE_KERNEL_HPP
#define SCPM_DETAIL_SPHERE_KERNEL_HPP

#include <algorithm>
#include <numbers>

#include "scpm/detail/dual.hpp"
#include "scpm/geometry.hpp"

// Overlap measures written once over a scalar type so that the same code
// yields plain values (double) and derivatives (Dual<N>).
namespace scpm::detail {

template <class T>
struct SphereT {
  T x, y, z, r;
};

template <class T>
T distance(const SphereT<T>& a, const SphereT<T>& b) {
  const T dx = a.x - b.x;
  const T dy = a.y - b.y;
  const T dz = a.z - b.z;
  return sqrt_d(dx * dx + dy * dy + dz * dz);
}

// Height of the cap cut from the sphere of radius `r_self` by the plane of
// the intersection circle: r_self * (1 - cos(phi_self)) in factored form.
template <class T>
T cap_height(const T& d, const T& r_self, const T& r_other) {
  return (r_other - r_self + d) * (r_other + r_self - d) / (2.0 * d);
}

template <class T>
T cap_volume(const T& r, const T& h) {
  return std::numbers::pi * h * h * (3.0 * r - h) / 3.0;
}

template <class T>
T ball_volume(const T& r) {
  return (4.0 * std::numbers::pi / 3.0) * r * r * r;
}

template <class T>
T intersection(const T& d, const T& ra, const T& rb, OverlapRegime regime) {
  switch (regime) {
    case OverlapRegime::disjoint:
      return T(0.0);
    case OverlapRegime::contained:
      return ball_volume(min_d(ra, rb));
    case OverlapRegime::intersecting:
      break;
  }
  // Cap of a has height h2, cap of b has height h1.
  const T h2 = cap_height(d, ra, rb);
  const T h1 = cap_height(d, rb, ra);
  return cap_volume(ra, h2) + cap_volume(rb, h1);
}

template <class T>
T union_of(const T& ra, const T& rb, const T& inter) {
  return (4.0 * std::numbers::pi / 3.0) * (ra * ra * ra + rb * rb * rb) - inter;
}

template <class T>
T siou(const T& d, const T& ra, const T& rb) {
  const OverlapRegime regime = classify_overlap(value(d), value(ra), value(rb));
  if (regime == OverlapRegime::disjoint) return T(0.0);
  // Nested: the union is the larger ball, so equal spheres give exactly 1.
  if (regime == OverlapRegime::contained) return ball_volume(min_d(ra, rb)) / ball_volume(max_d(ra, rb));
  const T inter = intersection(d, ra, rb, regime);
  return inter / union_of(ra, rb, inter);
}

template <class T>
T distance_radius_ratio(const T& d, const T& ra, const T& rb) {
  return d / (d + (ra + rb));
}

template <class T>
T cos_phi_ab(const T& d, const T& ra, const T& rb) {
  return (rb * rb + ra * ra - d * d) / (2.0 * ra * rb);
}

template <class T>
T angle_score(const T& d, const T& ra, const T& rb) {
  if (value(d) > value(ra) + value(rb)) return T(0.0);
  return acos_clamped(cos_phi_ab(d, ra, rb)) / std::numbers::pi;
}

}  // namespace scpm::detail

#endif  // SCPM_DETAIL_SPHERE_KERNEL_HPP
