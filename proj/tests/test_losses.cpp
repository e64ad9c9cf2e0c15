#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "scpm/losses.hpp"
#include "scpm/matching.hpp"

using namespace scpm;

namespace {

Sphere at(double x, double y, double z, double r) { return {{x, y, z}, r}; }

constexpr SphereLossKind kAllKinds[] = {SphereLossKind::box_iou, SphereLossKind::siou,
                                        SphereLossKind::sdiou, SphereLossKind::siou_pp};

LabelAssignment single_cell(Label label) {
  LabelAssignment a;
  a.grid = {{1, 1, 1}, 1};
  a.labels = {label};
  a.matched = {label == Label::positive ? 0 : -1};
  a.radius_target = {0.0};
  a.offset_target = {Vec3{}};
  return a;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("kind names round trip") {
  for (SphereLossKind k : kAllKinds) CHECK(parse_loss_kind(to_string(k)) == k);
  CHECK(parse_loss_kind("siou++") == SphereLossKind::siou_pp);
  CHECK_FALSE(parse_loss_kind("giou").has_value());
}

TEST_CASE("sphere loss values") {
  CHECK(sphere_loss(SphereLossKind::siou_pp, at(1, 2, 3, 4), at(1, 2, 3, 4)) == 0.0);
  CHECK(std::abs(sphere_loss(SphereLossKind::siou_pp, at(0, 0, -8, 1.5), at(0, 0, 0, 1.5)) - 8.0 / 11.0) <= 1e-12);
  CHECK(sphere_loss(SphereLossKind::siou_pp, at(0, 0, 0, 1), at(1, 0, 0, 1)) ==
        doctest::Approx(40.0 / 27.0).epsilon(1e-13));
  CHECK(sphere_loss(SphereLossKind::siou, at(0, 0, 0, 1), at(1, 0, 0, 1)) ==
        doctest::Approx(22.0 / 27.0).epsilon(1e-13));
  CHECK(sphere_loss(SphereLossKind::sdiou, at(0, 0, 0, 1), at(1, 0, 0, 1)) ==
        doctest::Approx(1.0 + 1.0 / 3.0 - 5.0 / 27.0).epsilon(1e-13));
  // SDIoU keeps its constant 1 when disjoint
  CHECK(sphere_loss(SphereLossKind::sdiou, at(0, 0, -8, 1.5), at(0, 0, 0, 1.5)) ==
        doctest::Approx(1.0 + 8.0 / 11.0));
}

TEST_CASE("box IoU baseline on inscribed cubes") {
  // Equal cubes of side 2r/sqrt(3) shifted by half a side along z: IoU = 1/3.
  const double r = 1.5;
  const double side = 2 * r / std::sqrt(3.0);
  CHECK(sphere_loss(SphereLossKind::box_iou, at(0, 0, side / 2, r), at(0, 0, 0, r)) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  CHECK(sphere_loss(SphereLossKind::box_iou, at(0, 0, 0, r), at(0, 0, 0, r)) == 0.0);
  CHECK(sphere_loss(SphereLossKind::box_iou, at(0, 0, -8, r), at(0, 0, 0, r)) == 1.0);
}

TEST_CASE("gradient examples") {
  SUBCASE("SIoU has no gradient for disjoint spheres") {
    const SphereGradient g = sphere_loss_gradient(SphereLossKind::siou, at(0, 0, -8, 1.5), at(0, 0, 0, 1.5));
    CHECK(g.d_cx == 0.0);
    CHECK(g.d_cy == 0.0);
    CHECK(g.d_cz == 0.0);
    CHECK(g.d_r == 0.0);
  }
  SUBCASE("SIoU++ pulls a distant prediction toward the target") {
    const SphereGradient g = sphere_loss_gradient(SphereLossKind::siou_pp, at(0, 0, -8, 1.5), at(0, 0, 0, 1.5));
    CHECK(g.d_cz < 0.0);
    // d R_DR / d z = (ra + rb) / (d + ra + rb)^2 * dd/dz with dd/dz = -1
    CHECK(g.d_cz == doctest::Approx(-3.0 / 121.0).epsilon(1e-14));
    CHECK_FALSE(g.near_boundary);
  }
  SUBCASE("identical spheres nudged along z match finite differences") {
    for (SphereLossKind k : kAllKinds) {
      const std::string kind_name(to_string(k));
    CAPTURE(kind_name);
      const Sphere pred = at(0, 0, 1e-3, 2.0);
      const Sphere gt = at(0, 0, 0, 2.0);
      const auto fd = oracle::central_difference(k, pred, gt);
      CHECK(oracle::gradient_error_norm(sphere_loss_gradient(k, pred, gt), fd) <= 1e-4);
    }
  }
  SUBCASE("boundary proximity is flagged") {
    CHECK(sphere_loss_gradient(SphereLossKind::siou_pp, at(0, 0, 3, 1.5), at(0, 0, 0, 1.5)).near_boundary);
    CHECK(sphere_loss_gradient(SphereLossKind::siou, at(0, 0, 1, 2), at(0, 0, 0, 1)).near_boundary);
  }
}

TEST_CASE("gradients agree with central differences on random pairs") {
  oracle::Rng rng(17);
  for (SphereLossKind k : kAllKinds) {
    const std::string kind_name(to_string(k));
    CAPTURE(kind_name);
    int checked = 0;
    while (checked < 200) {
      const auto [pred, gt] = oracle::random_pair(rng);
      if (!oracle::smooth_point(pred, gt)) continue;
      const auto fd = oracle::central_difference(k, pred, gt);
      CHECK(oracle::gradient_error(sphere_loss_gradient(k, pred, gt), fd) <= 1e-4);
      ++checked;
    }
  }
}

TEST_CASE("zero at optimum and scale invariance") {
  oracle::Rng rng(23);
  for (int i = 0; i < 300; ++i) {
    const auto [a, b] = oracle::random_pair(rng);
    CHECK(sphere_loss(SphereLossKind::siou_pp, a, a) == 0.0);
    CHECK(sphere_loss(SphereLossKind::siou, a, a) == 0.0);
    const double s = std::exp(rng.uniform(-4, 4));
    const Sphere as{a.center * s, a.radius * s};
    const Sphere bs{b.center * s, b.radius * s};
    for (SphereLossKind k : {SphereLossKind::siou, SphereLossKind::sdiou, SphereLossKind::siou_pp}) {
      const double d = center_distance(a, b);
      if (std::abs(d - a.radius - b.radius) < 1e-9) continue;
      CHECK(std::abs(sphere_loss(k, as, bs) - sphere_loss(k, a, b)) <= 1e-10);
    }
  }
}

TEST_CASE("non-overlap gradients") {
  oracle::Rng rng(29);
  for (int i = 0; i < 300; ++i) {
    const double ra = rng.uniform(0.5, 10), rb = rng.uniform(0.5, 10);
    const double d = ra + rb + 1e-6 + rng.uniform(0, 30);
    const Sphere pred{rng.direction() * d, ra};
    const Sphere gt{{}, rb};
    for (SphereLossKind k : {SphereLossKind::siou, SphereLossKind::box_iou}) {
      const SphereGradient g = sphere_loss_gradient(k, pred, gt);
      CHECK((g.d_cx == 0.0 && g.d_cy == 0.0 && g.d_cz == 0.0 && g.d_r == 0.0));
    }
    const SphereGradient g = sphere_loss_gradient(SphereLossKind::siou_pp, pred, gt);
    CHECK(std::hypot(g.d_cx, g.d_cy, g.d_cz) > 0.0);
  }
}

TEST_CASE("re-focal loss") {
  const FocalParams params;
  SUBCASE("ignored cells contribute nothing") {
    const std::vector<double> p{0.3};
    CHECK(refocal_loss(p, single_cell(Label::ignored), params) == 0.0);
  }
  SUBCASE("confident positive") {
    const std::vector<double> p{0.95};
    CHECK(refocal_loss(p, single_cell(Label::positive), params) ==
          doctest::Approx(0.375 * 0.05 * 0.05 * -std::log(0.95)).epsilon(1e-12));
    CHECK(refocal_loss(p, single_cell(Label::positive), params) == doctest::Approx(4.809e-5).epsilon(1e-4));
  }
  SUBCASE("under-confident positive is weighted by w") {
    const std::vector<double> p{0.5};
    CHECK(refocal_loss(p, single_cell(Label::positive), params) ==
          doctest::Approx(4 * 0.375 * 0.25 * std::log(2.0)).epsilon(1e-12));
    CHECK(refocal_loss(p, single_cell(Label::positive), params) == doctest::Approx(0.2599).epsilon(1e-3));
  }
  SUBCASE("threshold itself takes weight 1") {
    const std::vector<double> p{0.9};
    CHECK(refocal_loss(p, single_cell(Label::positive), params) ==
          doctest::Approx(focal_term(0.9, true, params)));
  }
  SUBCASE("negatives use 1 - p") {
    const std::vector<double> p{0.2};
    CHECK(refocal_loss(p, single_cell(Label::negative), params) ==
          doctest::Approx(0.375 * 0.04 * -std::log(0.8)).epsilon(1e-12));
  }
  SUBCASE("saturated probabilities stay finite") {
    const std::vector<double> zero{0.0}, one{1.0};
    CHECK(std::isfinite(refocal_loss(zero, single_cell(Label::positive), params)));
    CHECK(std::isfinite(refocal_loss(one, single_cell(Label::negative), params)));
  }
  SUBCASE("errors") {
    const std::vector<double> two{0.1, 0.2};
    CHECK_THROWS_AS(refocal_loss(two, single_cell(Label::negative), params), std::invalid_argument);
    const std::vector<double> bad{1.5};
    CHECK_THROWS_AS(refocal_loss(bad, single_cell(Label::negative), params), std::invalid_argument);
    const std::vector<double> nan{std::nan("")};
    CHECK_THROWS_AS(refocal_loss(nan, single_cell(Label::positive), params), std::invalid_argument);
  }
  SUBCASE("focal damping is strictly decreasing in p for unit weight") {
    double prev = std::numeric_limits<double>::infinity();
    for (double p = 0.9; p < 0.9999; p += 0.0005) {
      const double v = refocal_loss(std::vector<double>{p}, single_cell(Label::positive), params);
      CHECK(v < prev);
      prev = v;
    }
    prev = std::numeric_limits<double>::infinity();
    for (double p = 0.001; p < 0.9; p += 0.001) {
      const double v = focal_term(p, true, params);
      CHECK(v < prev);
      prev = v;
    }
  }
}

TEST_CASE("radius loss") {
  CHECK(radius_loss(1.3, 1.3) == 0.0);
  CHECK(radius_loss(1.05, 1.0) == doctest::Approx(0.01125).epsilon(1e-9));
  CHECK(radius_loss(1.5, 1.0) == doctest::Approx(0.5));
  // printed form: jump from beta / 2 to beta at |r - r*| = beta
  const double beta = 1.0 / 9.0;
  CHECK(radius_loss(beta * (1 - 1e-12), 0.0) == doctest::Approx(beta / 2));
  CHECK(radius_loss(beta, 0.0) == doctest::Approx(beta));
  oracle::Rng rng(31);
  for (int i = 0; i < 500; ++i) {
    const double r = rng.uniform(-3, 3), s = rng.uniform(-3, 3);
    CHECK(radius_loss(r, s) >= 0.0);
    CHECK(radius_loss(r, s) == radius_loss(s, r));
  }
}

TEST_CASE("offset loss") {
  CHECK(offset_loss({0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}) == 0.0);
  CHECK(offset_loss({1, 0, 0}, {0, 0, 0}) == 1.0);
  CHECK(offset_loss({0.3, 0.4, 0}, {0, 0, 0}) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("total loss") {
  const GridSpec grid{{6, 6, 6}, 4};
  const std::vector<NoduleAnnotation> nodules{{"n0", {10.3, 11.7, 9.1}, 3.2}};
  const LabelAssignment a = regression_targets(assign_labels(grid, nodules), nodules);
  const FocalParams focal;

  SUBCASE("no positives, confident negatives") {
    const std::vector<NoduleAnnotation> none;
    const LabelAssignment empty = regression_targets(assign_labels(grid, none), none);
    PredictionGrid pred = PredictionGrid::zeros(grid);
    std::fill(pred.center_prob.begin(), pred.center_prob.end(), 1e-7);
    const LossBreakdown b = total_loss(pred, empty, none);
    CHECK(b.total == doctest::Approx(0.0));
    CHECK(b.total < 1e-10);
  }

  SUBCASE("perfect regression leaves only the classification term") {
    PredictionGrid pred = PredictionGrid::zeros(grid);
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
      if (a.labels[i] == Label::positive) {
        pred.center_prob[i] = 0.97;
        pred.radius[i] = a.radius_target[i];
        pred.offset[i] = a.offset_target[i];
      } else {
        pred.center_prob[i] = 0.01;
      }
    }
    const LossBreakdown b = total_loss(pred, a, nodules);
    CHECK(b.radius == 0.0);
    CHECK(b.offset < 1e-12);
    CHECK(b.siou_pp < 1e-12);
    CHECK(b.total == doctest::Approx(b.cls).epsilon(1e-12));
    CHECK(b.cls == doctest::Approx(refocal_loss(pred.center_prob, a, focal)));
  }

  SUBCASE("random predictions equal the hand-summed objective") {
    oracle::Rng rng(37);
    PredictionGrid pred = PredictionGrid::zeros(grid);
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
      pred.center_prob[i] = rng.uniform(0.01, 0.99);
      pred.radius[i] = rng.uniform(0.3, 1.5);
      pred.offset[i] = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    }
    double cls = 0, reg = 0, sph = 0;
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
      const double p = pred.center_prob[i];
      if (a.labels[i] == Label::negative) cls += -0.375 * p * p * std::log(1 - p);
      if (a.labels[i] != Label::positive) continue;
      cls += (p < 0.9 ? 4.0 : 1.0) * -0.375 * (1 - p) * (1 - p) * std::log(p);
      const double dr = std::abs(pred.radius[i] - a.radius_target[i]);
      reg += dr < 1.0 / 9 ? 4.5 * dr * dr : dr;
      const Vec3 df = pred.offset[i] - a.offset_target[i];
      reg += std::sqrt(df.x * df.x + df.y * df.y + df.z * df.z);
      const Cell c = grid.cell_at(i);
      const Sphere s{{(c.x + 0.5 + pred.offset[i].x) * 4, (c.y + 0.5 + pred.offset[i].y) * 4,
                      (c.z + 0.5 + pred.offset[i].z) * 4},
                     pred.radius[i] * 4};
      sph += sphere_loss(SphereLossKind::siou_pp, s, nodules[0].sphere());
    }
    const LossBreakdown b = total_loss(pred, a, nodules);
    CHECK(b.total == doctest::Approx(cls + 1.0 * (reg + 2.0 * sph)).epsilon(1e-12));
    CHECK(b.total == doctest::Approx(b.cls + b.radius + b.offset + 2.0 * b.siou_pp).epsilon(1e-14));
  }

  SUBCASE("positive without a matched nodule is rejected") {
    LabelAssignment broken = a;
    for (std::size_t i = 0; i < broken.labels.size(); ++i) {
      if (broken.labels[i] == Label::positive) {
        broken.matched[i] = -1;
        break;
      }
    }
    CHECK_THROWS_AS(total_loss(PredictionGrid::zeros(grid), broken, nodules), std::invalid_argument);
  }

  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(total_loss(PredictionGrid::zeros({{5, 6, 6}, 4}), a, nodules), std::invalid_argument);
  }
}

}  // TEST_SUITE
