// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#include "occkit/geometry.hpp"

#include <cmath>
#include <cstdint>

#include "occkit/errors.hpp"

namespace occkit {

bool is_finite(const Point3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

PoseSE3::PoseSE3(const Quaternion& rotation, const Point3& translation) : t_(translation) {
  const double norm = std::sqrt(rotation.w * rotation.w + rotation.x * rotation.x +
                                rotation.y * rotation.y + rotation.z * rotation.z);
  if (!std::isfinite(norm) || !is_finite(translation)) {
    throw ValidationError("pose has non-finite components");
  }
  if (std::abs(norm - 1.0) > 1e-3) {
    throw ValidationError("quaternion norm deviates from 1 by more than 1e-3; rejecting as corrupt");
  }
  q_.w = rotation.w / norm;
  q_.x = rotation.x / norm;
  q_.y = rotation.y / norm;
  q_.z = rotation.z / norm;
}

PoseSE3 PoseSE3::from_translation(double x, double y, double z) {
  return PoseSE3{Quaternion{}, Point3{x, y, z}};
}

PoseSE3 PoseSE3::rot_z(double angle_rad) {
  return PoseSE3{Quaternion{std::cos(angle_rad / 2.0), 0.0, 0.0, std::sin(angle_rad / 2.0)},
                 Point3{}};
}

std::array<double, 9> PoseSE3::rotation_matrix() const {
  const double w = q_.w, x = q_.x, y = q_.y, z = q_.z;
  return {1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w),       2.0 * (x * z + y * w),
          2.0 * (x * y + z * w),       1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w),
          2.0 * (x * z - y * w),       2.0 * (y * z + x * w),       1.0 - 2.0 * (x * x + y * y)};
}

Point3 PoseSE3::apply(const Point3& p) const {
  const auto r = rotation_matrix();
  return Point3{r[0] * p.x + r[1] * p.y + r[2] * p.z + t_.x,
                r[3] * p.x + r[4] * p.y + r[5] * p.z + t_.y,
                r[6] * p.x + r[7] * p.y + r[8] * p.z + t_.z};
}

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
  const Quaternion& qa = a.rotation();
  const Quaternion& qb = b.rotation();
  // Hamilton product qa * qb; constructor renormalizes.
  Quaternion q{qa.w * qb.w - qa.x * qb.x - qa.y * qb.y - qa.z * qb.z,
               qa.w * qb.x + qa.x * qb.w + qa.y * qb.z - qa.z * qb.y,
               qa.w * qb.y - qa.x * qb.z + qa.y * qb.w + qa.z * qb.x,
               qa.w * qb.z + qa.x * qb.y - qa.y * qb.x + qa.z * qb.w};
  return PoseSE3{q, a.apply(b.translation())};
}

PoseSE3 invert(const PoseSE3& p) {
  const Quaternion& q = p.rotation();
  const Quaternion conj{q.w, -q.x, -q.y, -q.z};
  const PoseSE3 rot_only{conj, Point3{}};
  const Point3 t = p.translation();
  const Point3 ti = rot_only.apply(Point3{-t.x, -t.y, -t.z});
  return PoseSE3{conj, ti};
}

std::vector<Point3> transform_points(const PoseSE3& p, std::span<const Point3> pts) {
  std::vector<Point3> out(pts.begin(), pts.end());
  transform_points_inplace(p, out);
  return out;
}

void transform_points_inplace(const PoseSE3& p, std::vector<Point3>& pts) {
  const auto r = p.rotation_matrix();
  const Point3 t = p.translation();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(pts.size()); ++i) {
    const Point3 q = pts[static_cast<std::size_t>(i)];
    pts[static_cast<std::size_t>(i)] =
        Point3{r[0] * q.x + r[1] * q.y + r[2] * q.z + t.x,
               r[3] * q.x + r[4] * q.y + r[5] * q.z + t.y,
               r[6] * q.x + r[7] * q.y + r[8] * q.z + t.z};
  }
}

}  // namespace occkit
