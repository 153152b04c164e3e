// Copyright 2026 The det9 Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "det9/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "det9/errors.hpp"

namespace det9 {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Optical depth floor applied to vertices so that corners slightly behind
// the image plane still produce a finite amodal rectangle.
constexpr double kMinVertexDepth = 0.1;
}  // namespace

double wrap_angle(double theta) {
  if (!std::isfinite(theta)) {
    throw ValidationError("wrap_angle: angle is not finite");
  }
  double r = std::remainder(theta, kTwoPi);  // exact, lands in [-pi, pi]
  if (r <= -kPi) r += kTwoPi;
  return r;
}

Rotation::Rotation(double w, double x, double y, double z) : q_(w, x, y, z) {
  const double n = q_.norm();
  if (!std::isfinite(n) || n < 1e-12) {
    throw ValidationError("rotation quaternion has degenerate norm");
  }
  // Unit-norm inputs stay bit-exact; only off-norm inputs are rescaled.
  if (std::abs(n - 1.0) > 1e-9) {
    q_.coeffs() /= n;
  }
}

Rotation Rotation::from_euler(double yaw, double pitch, double roll) {
  Eigen::Quaterniond q =
      Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ())) *
      Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
      Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX());
  q.normalize();
  return from_quaternion(q);
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  return Rotation(q.w(), q.x(), q.y(), q.z());
}

double Rotation::yaw() const {
  const double w = q_.w(), x = q_.x(), y = q_.y(), z = q_.z();
  return wrap_angle(std::atan2(2.0 * (x * y + w * z), 1.0 - 2.0 * (y * y + z * z)));
}

double Rotation::pitch() const {
  const double s = std::clamp(2.0 * (q_.w() * q_.y() - q_.x() * q_.z()), -1.0, 1.0);
  return std::asin(s);
}

double Rotation::roll() const {
  const double w = q_.w(), x = q_.x(), y = q_.y(), z = q_.z();
  return wrap_angle(std::atan2(2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)));
}

Rotation CameraModel::canonical_optical_rotation() {
  return Rotation(0.5, 0.5, -0.5, 0.5);
}

std::array<Eigen::Vector3d, 8> box_vertices(const Box3D& box) {
  const Eigen::Matrix3d rot = box.rotation.matrix();
  const Eigen::Vector3d half = 0.5 * box.dims;
  std::array<Eigen::Vector3d, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Eigen::Vector3d local((i & 1) ? half.x() : -half.x(),
                                (i & 2) ? half.y() : -half.y(),
                                (i & 4) ? half.z() : -half.z());
    out[static_cast<std::size_t>(i)] = box.center + rot * local;
  }
  return out;
}

std::optional<Box2D> amodal_bbox2d(const CameraModel& cam, const Box3D& box) {
  const Eigen::Vector3d center_opt = cam.to_optical(box.center);
  if (!(center_opt.z() > 0.0)) {
    return std::nullopt;  // behind the image plane
  }
  Box2D bb;
  bb.xmin = bb.ymin = std::numeric_limits<double>::infinity();
  bb.xmax = bb.ymax = -std::numeric_limits<double>::infinity();
  for (const Eigen::Vector3d& v : box_vertices(box)) {
    const Eigen::Vector3d p = cam.to_optical(v);
    const double z = std::max(p.z(), kMinVertexDepth);
    const double u = cam.fx * p.x() / z + cam.u0;
    const double w = cam.fy * p.y() / z + cam.v0;
    bb.xmin = std::min(bb.xmin, u);
    bb.xmax = std::max(bb.xmax, u);
    bb.ymin = std::min(bb.ymin, w);
    bb.ymax = std::max(bb.ymax, w);
  }
  return bb;
}

double iou2d(const Box2D& a, const Box2D& b) {
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  if (iw <= 0.0) return 0.0;
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double cover_fraction(const Box2D& pred, const Box2D& region) {
  const double iw = std::min(pred.xmax, region.xmax) - std::max(pred.xmin, region.xmin);
  if (iw <= 0.0) return 0.0;
  const double ih = std::min(pred.ymax, region.ymax) - std::max(pred.ymin, region.ymin);
  if (ih <= 0.0) return 0.0;
  const double denom = pred.area();
  return denom > 0.0 ? iw * ih / denom : 0.0;
}

PairTerms pair_terms(const Box3D& d, const Box3D& g, double x_max) {
  PairTerms t;
  t.bev_dist = std::min(x_max, (d.center.head<2>() - g.center.head<2>()).norm());
  t.yaw_term =
      0.5 * (1.0 + std::cos(wrap_angle(d.rotation.yaw() - g.rotation.yaw())));
  t.pr_term =
      0.25 * (2.0 + std::cos(wrap_angle(d.rotation.pitch() - g.rotation.pitch())) +
              std::cos(wrap_angle(d.rotation.roll() - g.rotation.roll())));
  double size = 1.0;
  for (int i = 0; i < 3; ++i) {
    const double r = d.dims[i] / g.dims[i];
    size *= std::min(r, 1.0 / r);
  }
  t.size_term = size;
  return t;
}

}  // namespace det9
