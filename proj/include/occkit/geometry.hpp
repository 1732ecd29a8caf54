// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <vector>

namespace occkit {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Point3&) const = default;
};

bool is_finite(const Point3& p);

// Unit quaternion, scalar first (w, x, y, z). Right-handed, active rotation.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// Rigid transform: applies the rotation, then the translation.
// Construction renormalizes the quaternion; inputs whose norm deviates from 1
// by more than 1e-3 are rejected as corrupt rather than silently fixed.
class PoseSE3 {
 public:
  PoseSE3() = default;
  PoseSE3(const Quaternion& rotation, const Point3& translation);

  static PoseSE3 identity() { return PoseSE3{}; }
  static PoseSE3 from_translation(double x, double y, double z);
  // Rotation of `angle_rad` about +Z, no translation.
  static PoseSE3 rot_z(double angle_rad);

  const Quaternion& rotation() const { return q_; }
  const Point3& translation() const { return t_; }

  // Row-major 3x3 rotation matrix.
  std::array<double, 9> rotation_matrix() const;

  Point3 apply(const Point3& p) const;

 private:
  Quaternion q_;
  Point3 t_;
};

// Result applies b first, then a.
PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);

PoseSE3 invert(const PoseSE3& p);

// R*p + t for every point, order preserved.
std::vector<Point3> transform_points(const PoseSE3& p, std::span<const Point3> pts);
void transform_points_inplace(const PoseSE3& p, std::vector<Point3>& pts);

}  // namespace occkit
