// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dsvoxel/camera.hpp"
#include "dsvoxel/image.hpp"

namespace dsvoxel {

struct SpherePrimitive {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  Vec3 rgb = Vec3::Ones();
};

struct BoxPrimitive {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
  Vec3 rgb = Vec3::Ones();
};

struct PlanePrimitive {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3(0, 0, 1);
  Vec3 rgb = Vec3::Ones();
};

enum class PrimitiveKind { kSphere, kBox, kPlane };

struct SceneHit {
  double t = 0.0;  // ray parameter == axial depth for make_ray rays
  Vec3 rgb = Vec3::Zero();
  PrimitiveKind kind = PrimitiveKind::kPlane;
};

/// Closed-form test scene: spheres, axis-aligned boxes and one background
/// plane, each flat shaded. Doubles as the depth oracle for evaluation.
struct AnalyticScene {
  std::string name;
  std::vector<SpherePrimitive> spheres;
  std::vector<BoxPrimitive> boxes;
  PlanePrimitive background;
  Vec3 bbox_min = Vec3::Zero();
  Vec3 bbox_max = Vec3::Ones();

  /// Nearest intersection with t > eps, or nullopt if the ray escapes.
  std::optional<SceneHit> intersect(const Vec3& origin, const Vec3& direction) const;
};

/// Flat-shaded ground-truth render: image plus exact axial depth per pixel
/// (0 marks rays that miss everything). Depth comes back in full double
/// precision; the DepthMap overload stores the f32 values used on disk.
void oracle_render(const AnalyticScene& scene, const Camera& camera, Image& image,
                   std::vector<double>& depth);
void oracle_render(const AnalyticScene& scene, const Camera& camera, Image& image,
                   DepthMap& depth);

/// The reference desk-scale scene: red unit sphere ahead of the cameras, a
/// blue box offset to the side, light backdrop plane at z = -10.
AnalyticScene sphere_plane_scene();

AnalyticScene scene_by_name(const std::string& name);

/// Cameras on a forward-facing arc looking at the scene's focus point.
/// Angles are deterministic functions of the index, so view sets are stable.
std::vector<Camera> arc_train_cameras(int count, int resolution);
std::vector<Camera> arc_test_cameras(int count, int resolution);

/// Suggested integration bounds for arc cameras against the reference scene.
void arc_near_far(double& near, double& far);

}  // namespace dsvoxel
