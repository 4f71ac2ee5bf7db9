// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "dsvoxel/types.hpp"

namespace dsvoxel {

/// Pinhole camera. Convention: the camera looks along -z in its own frame,
/// +x is right, image v grows downward. Integer (u, v) address pixel corners;
/// the sample stored at pixel (i, j) sits at (i + 0.5, j + 0.5).
struct Camera {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  Mat4 cam_to_world = Mat4::Identity();

  Mat3 rotation() const { return cam_to_world.topLeftCorner<3, 3>(); }
  Vec3 center() const { return cam_to_world.topRightCorner<3, 1>(); }

  /// Throws ArgumentError unless the rotation block is orthonormal with
  /// det +1, focal lengths are positive and the principal point is inside
  /// the image.
  void validate() const;
};

/// Camera placed at `position` with its viewing axis (-z) toward `target`.
Camera look_at_camera(const Vec3& position, const Vec3& target, double fx, double fy,
                      double cx, double cy, int width, int height,
                      const Vec3& up = Vec3(0, 1, 0));

/// A viewing ray. `direction` is scaled so its component along the camera
/// viewing axis has unit magnitude: the ray parameter t IS axial depth, so t
/// values compare directly against keypoint depths.
struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::Zero();
  double t_near = 0.0;
  double t_far = 0.0;

  Vec3 at(double t) const { return origin + t * direction; }
};

/// Ray through continuous image point (u, v). Requires 0 <= u <= width,
/// 0 <= v <= height and 0 < t_near < t_far.
Ray make_ray(const Camera& camera, double u, double v, double t_near, double t_far);

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // axial distance, -z in the camera frame
  bool in_front = false;
};

/// Perspective projection of a world point. Points at or behind the camera
/// plane come back with in_front = false; out-of-image coordinates are
/// returned as-is for the caller to filter.
Projection project_point_depth(const Camera& camera, const Vec3& point);

/// Rotation matrix from a (w, x, y, z) quaternion, normalized internally.
/// Throws ParseError on a zero-norm quaternion.
Mat3 quat_to_rotation(const std::array<double, 4>& wxyz);

/// Inverse of quat_to_rotation, returned with w >= 0.
std::array<double, 4> rotation_to_quat(const Mat3& rot);

}  // namespace dsvoxel
