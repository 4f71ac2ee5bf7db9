// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/camera.hpp"

#include <cmath>
#include <string>

#include "dsvoxel/errors.hpp"

namespace dsvoxel {

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw ArgumentError("camera focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw ArgumentError("camera image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw ArgumentError("camera principal point outside image");
  }
  const Mat3 r = rotation();
  const Mat3 err = r.transpose() * r - Mat3::Identity();
  if (err.cwiseAbs().maxCoeff() >= 1e-9) {
    throw ArgumentError("camera rotation is not orthonormal");
  }
  if (r.determinant() <= 0.0) {
    throw ArgumentError("camera rotation is not right-handed");
  }
}

Camera look_at_camera(const Vec3& position, const Vec3& target, double fx, double fy,
                      double cx, double cy, int width, int height, const Vec3& up) {
  const Vec3 forward = (target - position).normalized();
  const Vec3 z_axis = -forward;  // camera looks along -z
  Vec3 x_axis = up.cross(z_axis);
  if (x_axis.norm() < 1e-12) {
    throw ArgumentError("look_at_camera: view direction parallel to up vector");
  }
  x_axis.normalize();
  const Vec3 y_axis = z_axis.cross(x_axis);

  Camera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = cx;
  cam.cy = cy;
  cam.width = width;
  cam.height = height;
  cam.cam_to_world = Mat4::Identity();
  cam.cam_to_world.block<3, 1>(0, 0) = x_axis;
  cam.cam_to_world.block<3, 1>(0, 1) = y_axis;
  cam.cam_to_world.block<3, 1>(0, 2) = z_axis;
  cam.cam_to_world.block<3, 1>(0, 3) = position;
  cam.validate();
  return cam;
}

Ray make_ray(const Camera& camera, double u, double v, double t_near, double t_far) {
  if (!(u >= 0.0 && u <= camera.width && v >= 0.0 && v <= camera.height)) {
    throw ArgumentError("make_ray: image coordinates (" + std::to_string(u) + ", " +
                        std::to_string(v) + ") outside [0," + std::to_string(camera.width) +
                        "]x[0," + std::to_string(camera.height) + "]");
  }
  if (!(t_near > 0.0) || !(t_near < t_far)) {
    throw ArgumentError("make_ray: require 0 < t_near < t_far");
  }
  // -1 along the camera axis; v flips because image rows grow downward.
  const Vec3 dir_cam((u - camera.cx) / camera.fx, -(v - camera.cy) / camera.fy, -1.0);
  Ray ray;
  ray.origin = camera.center();
  ray.direction = camera.rotation() * dir_cam;
  ray.t_near = t_near;
  ray.t_far = t_far;
  return ray;
}

Projection project_point_depth(const Camera& camera, const Vec3& point) {
  const Vec3 local = camera.rotation().transpose() * (point - camera.center());
  Projection proj;
  proj.depth = -local.z();
  proj.in_front = proj.depth > 0.0;
  if (proj.in_front) {
    proj.u = camera.cx + camera.fx * local.x() / proj.depth;
    proj.v = camera.cy - camera.fy * local.y() / proj.depth;
  }
  return proj;
}

Mat3 quat_to_rotation(const std::array<double, 4>& wxyz) {
  const double n = std::sqrt(wxyz[0] * wxyz[0] + wxyz[1] * wxyz[1] + wxyz[2] * wxyz[2] +
                             wxyz[3] * wxyz[3]);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw ParseError("zero-norm quaternion");
  }
  const double w = wxyz[0] / n, x = wxyz[1] / n, y = wxyz[2] / n, z = wxyz[3] / n;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

std::array<double, 4> rotation_to_quat(const Mat3& rot) {
  const double trace = rot.trace();
  std::array<double, 4> q{};
  if (trace > 0.0) {
    double s = std::sqrt(trace + 1.0) * 2.0;
    q[0] = 0.25 * s;
    q[1] = (rot(2, 1) - rot(1, 2)) / s;
    q[2] = (rot(0, 2) - rot(2, 0)) / s;
    q[3] = (rot(1, 0) - rot(0, 1)) / s;
  } else if (rot(0, 0) > rot(1, 1) && rot(0, 0) > rot(2, 2)) {
    double s = std::sqrt(1.0 + rot(0, 0) - rot(1, 1) - rot(2, 2)) * 2.0;
    q[0] = (rot(2, 1) - rot(1, 2)) / s;
    q[1] = 0.25 * s;
    q[2] = (rot(0, 1) + rot(1, 0)) / s;
    q[3] = (rot(0, 2) + rot(2, 0)) / s;
  } else if (rot(1, 1) > rot(2, 2)) {
    double s = std::sqrt(1.0 + rot(1, 1) - rot(0, 0) - rot(2, 2)) * 2.0;
    q[0] = (rot(0, 2) - rot(2, 0)) / s;
    q[1] = (rot(0, 1) + rot(1, 0)) / s;
    q[2] = 0.25 * s;
    q[3] = (rot(1, 2) + rot(2, 1)) / s;
  } else {
    double s = std::sqrt(1.0 + rot(2, 2) - rot(0, 0) - rot(1, 1)) * 2.0;
    q[0] = (rot(1, 0) - rot(0, 1)) / s;
    q[1] = (rot(0, 2) + rot(2, 0)) / s;
    q[2] = (rot(1, 2) + rot(2, 1)) / s;
    q[3] = 0.25 * s;
  }
  if (q[0] < 0.0) {
    for (double& c : q) c = -c;
  }
  const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  for (double& c : q) c /= n;
  return q;
}

}  // namespace dsvoxel
