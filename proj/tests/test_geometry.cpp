// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "occkit/errors.hpp"
#include "occkit/geometry.hpp"
#include "occkit/rng.hpp"
#include "oracles.hpp"

using namespace occkit;

namespace {
constexpr double kTol = 1e-9;
constexpr double kHalfPi = std::numbers::pi / 2.0;
}  // namespace

TEST_CASE("pose construction normalizes and validates") {
  const PoseSE3 p{Quaternion{1.0 + 5e-4, 0.0, 0.0, 0.0}, Point3{1, 2, 3}};
  const Quaternion& q = p.rotation();
  CHECK(std::abs(std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z) - 1.0) < kTol);

  CHECK_THROWS_AS((PoseSE3{Quaternion{1.1, 0, 0, 0}, Point3{}}), ValidationError);
  CHECK_THROWS_AS((PoseSE3{Quaternion{0, 0, 0, 0}, Point3{}}), ValidationError);
  const double nan = std::nan("");
  CHECK_THROWS_AS((PoseSE3{Quaternion{1, 0, 0, 0}, Point3{nan, 0, 0}}), ValidationError);
}

TEST_CASE("rotation matrix is orthonormal with unit determinant") {
  Rng rng(42);
  for (int i = 0; i < 100; ++i) {
    const auto r = oracle::random_pose(rng).rotation_matrix();
    // R^T R == I
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += r[k * 3 + a] * r[k * 3 + b];
        CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < kTol);
      }
    }
    const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                       r[2] * (r[3] * r[7] - r[4] * r[6]);
    CHECK(std::abs(det - 1.0) < kTol);
  }
}

TEST_CASE("compose: identity and translations") {
  const PoseSE3 id;
  const PoseSE3 both = compose(id, id);
  CHECK(both.rotation().w == doctest::Approx(1.0).epsilon(kTol));
  CHECK(both.translation().x == 0.0);

  const PoseSE3 t = compose(PoseSE3::from_translation(1, 0, 0), PoseSE3::from_translation(0, 2, 0));
  CHECK(t.translation().x == doctest::Approx(1.0).epsilon(kTol));
  CHECK(t.translation().y == doctest::Approx(2.0).epsilon(kTol));
  CHECK(t.translation().z == doctest::Approx(0.0).epsilon(kTol));
}

TEST_CASE("compose matches the homogeneous-matrix oracle") {
  const PoseSE3 two_quarters = compose(PoseSE3::rot_z(kHalfPi), PoseSE3::rot_z(kHalfPi));
  const oracle::Mat4 expected = oracle::from_pose(PoseSE3::rot_z(2.0 * kHalfPi));
  CHECK(oracle::max_abs_diff(oracle::from_pose(two_quarters), expected) < kTol);

  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const PoseSE3 a = oracle::random_pose(rng);
    const PoseSE3 b = oracle::random_pose(rng);
    const oracle::Mat4 m = oracle::multiply(oracle::from_pose(a), oracle::from_pose(b));
    CHECK(oracle::max_abs_diff(oracle::from_pose(compose(a, b)), m) < kTol);
  }
}

TEST_CASE("compose is associative") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const PoseSE3 a = oracle::random_pose(rng);
    const PoseSE3 b = oracle::random_pose(rng);
    const PoseSE3 c = oracle::random_pose(rng);
    const oracle::Mat4 left = oracle::from_pose(compose(a, compose(b, c)));
    const oracle::Mat4 right = oracle::from_pose(compose(compose(a, b), c));
    CHECK(oracle::max_abs_diff(left, right) < kTol);
  }
}

TEST_CASE("invert") {
  const PoseSE3 id_inv = invert(PoseSE3{});
  CHECK(oracle::max_abs_diff(oracle::from_pose(id_inv), oracle::identity4()) < kTol);

  const PoseSE3 t_inv = invert(PoseSE3::from_translation(1, 2, 3));
  CHECK(t_inv.translation().x == doctest::Approx(-1.0).epsilon(kTol));
  CHECK(t_inv.translation().y == doctest::Approx(-2.0).epsilon(kTol));
  CHECK(t_inv.translation().z == doctest::Approx(-3.0).epsilon(kTol));

  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const PoseSE3 p = oracle::random_pose(rng);
    const oracle::Mat4 round = oracle::from_pose(compose(invert(p), p));
    CHECK(oracle::max_abs_diff(round, oracle::identity4()) < kTol);
  }
}

TEST_CASE("transform_points") {
  const std::vector<Point3> pts{{1, 0, 0}, {0, 1, 0}, {2, 3, 4}};
  SUBCASE("identity keeps points") {
    const auto out = transform_points(PoseSE3{}, pts);
    REQUIRE(out.size() == pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(out[i].x == pts[i].x);
      CHECK(out[i].y == pts[i].y);
      CHECK(out[i].z == pts[i].z);
    }
  }
  SUBCASE("quarter turn about z maps x to y") {
    const auto out = transform_points(PoseSE3::rot_z(kHalfPi), pts);
    CHECK(std::abs(out[0].x - 0.0) < kTol);
    CHECK(std::abs(out[0].y - 1.0) < kTol);
    CHECK(std::abs(out[0].z - 0.0) < kTol);
  }
  SUBCASE("pairwise distances preserved") {
    Rng rng(17);
    for (int rep = 0; rep < 50; ++rep) {
      const PoseSE3 p = oracle::random_pose(rng);
      const auto out = transform_points(p, pts);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
          const double before = std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y,
                                           pts[i].z - pts[j].z);
          const double after = std::hypot(out[i].x - out[j].x, out[i].y - out[j].y,
                                          out[i].z - out[j].z);
          CHECK(std::abs(before - after) < kTol);
        }
      }
    }
  }
}

TEST_CASE("round trip through a pose and its inverse") {
  Rng rng(19);
  for (int rep = 0; rep < 100; ++rep) {
    const PoseSE3 p = oracle::random_pose(rng);
    std::vector<Point3> pts;
    for (int i = 0; i < 10; ++i) {
      pts.push_back(Point3{rng.uniform_in(-20, 20), rng.uniform_in(-20, 20), rng.uniform_in(-20, 20)});
    }
    const auto fwd = transform_points(p, pts);
    const auto back = transform_points(invert(p), fwd);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(std::abs(back[i].x - pts[i].x) < kTol);
      CHECK(std::abs(back[i].y - pts[i].y) < kTol);
      CHECK(std::abs(back[i].z - pts[i].z) < kTol);
    }
  }
}
