// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/scene.hpp"

#include <cmath>
#include <limits>

#include "dsvoxel/errors.hpp"
#include "dsvoxel/parallel.hpp"

namespace dsvoxel {

namespace {

constexpr double kHitEps = 1e-9;

std::optional<double> intersect_sphere(const SpherePrimitive& s, const Vec3& o, const Vec3& d) {
  const Vec3 oc = o - s.center;
  const double a = d.dot(d);
  const double b = 2.0 * d.dot(oc);
  const double c = oc.dot(oc) - s.radius * s.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double t0 = (-b - sq) / (2.0 * a);
  if (t0 > kHitEps) return t0;
  const double t1 = (-b + sq) / (2.0 * a);
  if (t1 > kHitEps) return t1;
  return std::nullopt;
}

std::optional<double> intersect_box(const BoxPrimitive& box, const Vec3& o, const Vec3& d) {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] == 0.0) {
      if (o[axis] < box.min[axis] || o[axis] > box.max[axis]) return std::nullopt;
      continue;
    }
    double lo = (box.min[axis] - o[axis]) / d[axis];
    double hi = (box.max[axis] - o[axis]) / d[axis];
    if (lo > hi) std::swap(lo, hi);
    t_enter = std::max(t_enter, lo);
    t_exit = std::min(t_exit, hi);
  }
  if (t_enter > t_exit) return std::nullopt;
  if (t_enter > kHitEps) return t_enter;
  if (t_exit > kHitEps) return t_exit;
  return std::nullopt;
}

std::optional<double> intersect_plane(const PlanePrimitive& p, const Vec3& o, const Vec3& d) {
  const double denom = d.dot(p.normal);
  if (std::abs(denom) < 1e-14) return std::nullopt;
  const double t = (p.point - o).dot(p.normal) / denom;
  if (t > kHitEps) return t;
  return std::nullopt;
}

}  // namespace

std::optional<SceneHit> AnalyticScene::intersect(const Vec3& origin, const Vec3& direction) const {
  std::optional<SceneHit> best;
  auto consider = [&best](double t, const Vec3& rgb, PrimitiveKind kind) {
    if (!best || t < best->t) best = SceneHit{t, rgb, kind};
  };
  for (const auto& s : spheres) {
    if (auto t = intersect_sphere(s, origin, direction)) {
      consider(*t, s.rgb, PrimitiveKind::kSphere);
    }
  }
  for (const auto& b : boxes) {
    if (auto t = intersect_box(b, origin, direction)) {
      consider(*t, b.rgb, PrimitiveKind::kBox);
    }
  }
  if (auto t = intersect_plane(background, origin, direction)) {
    consider(*t, background.rgb, PrimitiveKind::kPlane);
  }
  return best;
}

void oracle_render(const AnalyticScene& scene, const Camera& camera, Image& image,
                   std::vector<double>& depth) {
  camera.validate();
  image = Image::zeros(camera.width, camera.height);
  depth.assign(static_cast<std::size_t>(camera.width) * camera.height, 0.0);
  parallel_for(static_cast<std::size_t>(camera.height), [&](std::size_t j0, std::size_t j1) {
    for (std::size_t j = j0; j < j1; ++j) {
      for (int i = 0; i < camera.width; ++i) {
        // Pixel centers; direction built directly so near/far do not matter here.
        const Vec3 dir_cam((i + 0.5 - camera.cx) / camera.fx,
                           -(j + 0.5 - camera.cy) / camera.fy, -1.0);
        const Vec3 dir = camera.rotation() * dir_cam;
        if (auto hit = scene.intersect(camera.center(), dir)) {
          image.set_pixel(i, static_cast<int>(j), hit->rgb);
          depth[j * camera.width + i] = hit->t;
        }
      }
    }
  });
}

void oracle_render(const AnalyticScene& scene, const Camera& camera, Image& image,
                   DepthMap& depth) {
  std::vector<double> exact;
  oracle_render(scene, camera, image, exact);
  depth = DepthMap::zeros(camera.width, camera.height);
  for (std::size_t i = 0; i < exact.size(); ++i) {
    depth.data[i] = static_cast<float>(exact[i]);
  }
}

AnalyticScene sphere_plane_scene() {
  AnalyticScene scene;
  scene.name = "sphere-plane";
  scene.spheres.push_back({Vec3(0.0, 0.0, -4.0), 1.0, Vec3(0.8, 0.2, 0.2)});
  scene.boxes.push_back({Vec3(0.6, -1.6, -7.0), Vec3(1.8, -0.4, -5.8), Vec3(0.2, 0.4, 0.8)});
  scene.background = {Vec3(0.0, 0.0, -10.0), Vec3(0.0, 0.0, 1.0), Vec3(0.75, 0.75, 0.65)};
  scene.bbox_min = Vec3(-2.0, -2.0, -11.0);
  scene.bbox_max = Vec3(2.0, 2.0, -2.0);
  return scene;
}

AnalyticScene scene_by_name(const std::string& name) {
  if (name == "sphere" || name == "sphere-plane") return sphere_plane_scene();
  throw ArgumentError("unknown scene '" + name + "' (available: sphere)");
}

namespace {

constexpr double kDegree = M_PI / 180.0;
const Vec3 kLookAt(0.0, 0.0, -4.0);
constexpr double kArcRadius = 4.0;

Camera arc_camera(double azimuth_deg, double elevation_deg, int resolution) {
  const double az = azimuth_deg * kDegree;
  const double el = elevation_deg * kDegree;
  const Vec3 offset(std::sin(az) * std::cos(el), std::sin(el), std::cos(az) * std::cos(el));
  const Vec3 position = kLookAt + kArcRadius * offset;
  const double focal = 1.25 * resolution;
  return look_at_camera(position, kLookAt, focal, focal, resolution / 2.0, resolution / 2.0,
                        resolution, resolution);
}

}  // namespace

std::vector<Camera> arc_train_cameras(int count, int resolution) {
  if (count < 1) throw ArgumentError("need at least one training view");
  std::vector<Camera> cams;
  cams.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double azimuth =
        count == 1 ? 0.0 : -33.0 + 66.0 * static_cast<double>(i) / (count - 1);
    const double elevation = 4.0 * static_cast<double>(i % 3 - 1);
    cams.push_back(arc_camera(azimuth, elevation, resolution));
  }
  return cams;
}

std::vector<Camera> arc_test_cameras(int count, int resolution) {
  static constexpr double kAzimuths[] = {-16.0, 3.0, 21.0, -26.0, 11.0, 28.0, -8.0, -21.0};
  static constexpr double kElevations[] = {2.0, -3.0, 5.0, -1.0, 3.0, -4.0, 1.0, 0.0};
  constexpr int kMax = static_cast<int>(std::size(kAzimuths));
  if (count < 1 || count > kMax) {
    throw ArgumentError("test view count must be in [1, " + std::to_string(kMax) + "]");
  }
  std::vector<Camera> cams;
  cams.reserve(count);
  for (int i = 0; i < count; ++i) {
    cams.push_back(arc_camera(kAzimuths[i], kElevations[i], resolution));
  }
  return cams;
}

void arc_near_far(double& near, double& far) {
  near = 1.0;
  far = 16.0;
}

}  // namespace dsvoxel
