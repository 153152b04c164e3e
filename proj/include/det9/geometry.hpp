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

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <optional>

namespace det9 {

/// Normalizes an angle to (-pi, pi]. Throws ValidationError on a non-finite
/// input.
double wrap_angle(double theta);

/// Rigid-body orientation stored canonically as a unit quaternion, with
/// Euler accessors in the intrinsic z-y'-x'' convention: yaw about the
/// up-axis first, then pitch, then roll. All accessors return angles in
/// (-pi, pi].
class Rotation {
 public:
  /// Identity.
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}

  /// From quaternion components; renormalized when needed. Throws
  /// ValidationError when the norm is degenerate or non-finite.
  Rotation(double w, double x, double y, double z);

  static Rotation from_euler(double yaw, double pitch, double roll);
  static Rotation from_quaternion(const Eigen::Quaterniond& q);

  const Eigen::Quaterniond& quat() const { return q_; }
  Eigen::Matrix3d matrix() const { return q_.toRotationMatrix(); }

  double yaw() const;
  double pitch() const;
  double roll() const;

 private:
  Eigen::Quaterniond q_;
};

/// Oriented 3D box in the evaluation frame (x forward, y left, z up).
/// dims holds length (extent along local x), width (local y), and height
/// (local z), all in meters.
struct Box3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d dims = Eigen::Vector3d::Ones();
  Rotation rotation;

  double length() const { return dims.x(); }
  double width() const { return dims.y(); }
  double height() const { return dims.z(); }

  bool valid() const {
    return center.allFinite() && dims.allFinite() && (dims.array() > 0.0).all();
  }
};

/// Pinhole camera intrinsics plus the pose mapping evaluation-frame points
/// into the optical frame (z forward, x right, y down).
struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double u0 = 0.0;
  double v0 = 0.0;
  int width = 0;
  int height = 0;
  Rotation eval_to_optical;
  Eigen::Vector3d eval_to_optical_t = Eigen::Vector3d::Zero();

  Eigen::Vector3d to_optical(const Eigen::Vector3d& p_eval) const {
    return eval_to_optical.quat() * p_eval + eval_to_optical_t;
  }

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 &&
           std::isfinite(u0) && std::isfinite(v0) &&
           eval_to_optical_t.allFinite();
  }

  /// The canonical axis permutation taking (x fwd, y left, z up) to
  /// (z fwd, x right, y down): quaternion (0.5, 0.5, -0.5, 0.5).
  static Rotation canonical_optical_rotation();
};

/// Axis-aligned image rectangle in pixels, real-valued and not restricted
/// to the image canvas.
struct Box2D {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double area() const { return (xmax - xmin) * (ymax - ymin); }
  bool valid() const {
    return std::isfinite(xmin) && std::isfinite(ymin) && std::isfinite(xmax) &&
           std::isfinite(ymax) && xmin < xmax && ymin < ymax;
  }
};

/// Per-pair summands of the depth-dependent true-positive metrics.
struct PairTerms {
  double bev_dist = 0.0;   // meters, clamped to x_max
  double yaw_term = 1.0;   // (1 + cos dYaw) / 2
  double pr_term = 1.0;    // (2 + cos dPitch + cos dRoll) / 4
  double size_term = 1.0;  // prod over l,w,h of min(d/g, g/d)
};

/// The 8 corners of a box in the evaluation frame. Corner i has local
/// offsets (sx*l/2, sy*w/2, sz*h/2) with sx = +1 iff bit 0 of i is set,
/// sy from bit 1, sz from bit 2; offsets are rotated then translated.
std::array<Eigen::Vector3d, 8> box_vertices(const Box3D& box);

/// Circumscribing rectangle of the 8 box vertices projected through the
/// pinhole model. Vertex optical depths are clamped to 0.1 m before
/// projection; the result is amodal (never clipped to the image canvas).
/// Returns nullopt when the box center sits at optical depth <= 0.
std::optional<Box2D> amodal_bbox2d(const CameraModel& cam, const Box3D& box);

/// Intersection over union of two rectangles; 0 when disjoint.
double iou2d(const Box2D& a, const Box2D& b);

/// Fraction of `pred`'s area covered by `region`.
double cover_fraction(const Box2D& pred, const Box2D& region);

/// Per-pair metric terms between a detection box and its ground truth.
PairTerms pair_terms(const Box3D& d, const Box3D& g, double x_max);

/// Distance to the camera in the ground plane: sqrt(x^2 + y^2) of an
/// evaluation-frame point.
inline double planar_depth(const Eigen::Vector3d& center) {
  return std::hypot(center.x(), center.y());
}

}  // namespace det9
