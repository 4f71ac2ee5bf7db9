// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/camera.hpp"

#include <doctest.h>

#include "dsvoxel/errors.hpp"
#include "test_support.hpp"

using namespace dsvoxel;

namespace {

Camera identity_camera(double fx = 100.0, double fy = 100.0) {
  Camera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = 32.0;
  cam.cy = 32.0;
  cam.width = 64;
  cam.height = 64;
  return cam;
}

}  // namespace

TEST_CASE("make_ray principal ray points along -z") {
  const Camera cam = identity_camera();
  const Ray ray = make_ray(cam, cam.cx, cam.cy, 0.1, 10.0);
  CHECK(ray.origin.isZero(0.0));
  CHECK(ray.direction.isApprox(Vec3(0, 0, -1), 1e-15));
}

TEST_CASE("make_ray one focal length right of center") {
  Camera cam = identity_camera();
  cam.width = cam.height = 256;
  cam.cx = cam.cy = 128.0;
  const Ray ray = make_ray(cam, cam.cx + 100.0, cam.cy, 0.1, 10.0);
  CHECK(ray.direction.isApprox(Vec3(1, 0, -1), 1e-15));
}

TEST_CASE("make_ray respects the camera rotation") {
  Camera cam = identity_camera();
  // 90 degrees about world y: camera forward (0,0,-1) maps to (-1,0,0).
  cam.cam_to_world.topLeftCorner<3, 3>() = quat_to_rotation({std::sqrt(0.5), 0, std::sqrt(0.5), 0});
  const Ray ray = make_ray(cam, cam.cx, cam.cy, 0.1, 10.0);
  CHECK(ray.direction.isApprox(Vec3(-1, 0, 0), 1e-12));
}

TEST_CASE("make_ray rejects bad inputs") {
  const Camera cam = identity_camera();
  CHECK_THROWS_AS(make_ray(cam, -0.5, 10.0, 0.1, 10.0), ArgumentError);
  CHECK_THROWS_AS(make_ray(cam, 10.0, 64.5, 0.1, 10.0), ArgumentError);
  CHECK_THROWS_AS(make_ray(cam, 10.0, 10.0, 5.0, 5.0), ArgumentError);
  CHECK_THROWS_AS(make_ray(cam, 10.0, 10.0, 0.0, 5.0), ArgumentError);
}

TEST_CASE("project_point_depth on-axis and behind-camera cases") {
  const Camera cam = identity_camera();
  const Projection onaxis = project_point_depth(cam, Vec3(0, 0, -3));
  CHECK(onaxis.in_front);
  CHECK(onaxis.depth == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(onaxis.u == doctest::Approx(cam.cx));
  CHECK(onaxis.v == doctest::Approx(cam.cy));

  CHECK_FALSE(project_point_depth(cam, Vec3(0, 0, 2)).in_front);
}

TEST_CASE("project_point_depth subtracts the camera position") {
  Camera cam = identity_camera();
  cam.cam_to_world.topRightCorner<3, 1>() = Vec3(0, 0, 1);
  const Projection p = project_point_depth(cam, Vec3(0, 0, -3));
  CHECK(p.depth == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("quat_to_rotation known values") {
  CHECK(quat_to_rotation({1, 0, 0, 0}).isApprox(Mat3::Identity(), 1e-15));

  const Mat3 flip = quat_to_rotation({0, 0, 0, 1});
  Mat3 expected;
  expected << -1, 0, 0, 0, -1, 0, 0, 0, 1;
  CHECK(flip.isApprox(expected, 1e-15));

  // 90 degrees about x.
  const Mat3 rx = quat_to_rotation({std::sqrt(0.5), std::sqrt(0.5), 0, 0});
  Mat3 expected_x;
  expected_x << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  CHECK(rx.isApprox(expected_x, 1e-12));

  CHECK_THROWS_AS(quat_to_rotation({0, 0, 0, 0}), ParseError);
}

TEST_CASE("quat_to_rotation is orthonormal for random quaternions") {
  Rng rng(42);
  for (int i = 0; i < 1000; ++i) {
    std::array<double, 4> q;
    for (double& c : q) c = rng.uniform(-1.0, 1.0);
    if (std::abs(q[0]) + std::abs(q[1]) + std::abs(q[2]) + std::abs(q[3]) < 1e-3) q[0] = 1.0;
    const Mat3 r = quat_to_rotation(q);
    CHECK((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(r.determinant() > 0.0);
  }
}

TEST_CASE("rotation_to_quat inverts quat_to_rotation") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    std::array<double, 4> q;
    for (double& c : q) c = rng.uniform(-1.0, 1.0);
    if (std::abs(q[0]) + std::abs(q[1]) + std::abs(q[2]) + std::abs(q[3]) < 1e-3) q[0] = 1.0;
    const Mat3 r = quat_to_rotation(q);
    const Mat3 r2 = quat_to_rotation(rotation_to_quat(r));
    CHECK((r - r2).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("projection round trip: ray through the projection reproduces the point") {
  Rng rng(123);
  int tested = 0;
  while (tested < 1000) {
    const Camera cam = test::random_camera(rng);
    const Vec3 point(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const Projection proj = project_point_depth(cam, point);
    if (!proj.in_front || proj.depth < 0.05) continue;
    if (proj.u < 0 || proj.u > cam.width || proj.v < 0 || proj.v > cam.height) continue;
    ++tested;
    const Ray ray = make_ray(cam, proj.u, proj.v, proj.depth * 0.5, proj.depth * 2.0);
    CHECK((ray.at(proj.depth) - point).norm() < 1e-9);
  }
}

TEST_CASE("ray parameter equals axial depth") {
  Rng rng(321);
  for (int i = 0; i < 200; ++i) {
    const Camera cam = test::random_camera(rng);
    const double u = rng.uniform(0, cam.width);
    const double v = rng.uniform(0, cam.height);
    const Ray ray = make_ray(cam, u, v, 0.1, 20.0);
    const double t = rng.uniform(0.1, 20.0);
    const Vec3 local = cam.rotation().transpose() * (ray.at(t) - ray.origin);
    CHECK(-local.z() == doctest::Approx(t).epsilon(1e-13));
  }
}

TEST_CASE("camera validation rejects non-orthonormal rotations") {
  Camera cam = identity_camera();
  cam.cam_to_world(0, 0) = 1.1;
  CHECK_THROWS_AS(cam.validate(), ArgumentError);
}
