// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace dsvoxel {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

}  // namespace dsvoxel
