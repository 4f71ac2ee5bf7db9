// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "dsvoxel/camera.hpp"
#include "dsvoxel/scene.hpp"

namespace dsvoxel {

/// Sentinel for a 2D observation without a triangulated 3D point.
inline constexpr std::uint64_t kInvalidPoint3dId = std::numeric_limits<std::uint64_t>::max();

enum class SfmCameraModel : std::int32_t {
  kSimplePinhole = 0,  // f, cx, cy
  kPinhole = 1,        // fx, fy, cx, cy
  kSimpleRadial = 2,   // f, cx, cy, k (k parsed but ignored)
};

struct SfmCamera {
  std::uint32_t camera_id = 0;
  SfmCameraModel model = SfmCameraModel::kSimplePinhole;
  std::uint64_t width = 0;
  std::uint64_t height = 0;
  std::vector<double> params;

  bool operator==(const SfmCamera&) const = default;
};

struct SfmObservation {
  double x = 0.0;
  double y = 0.0;
  std::uint64_t point3d_id = kInvalidPoint3dId;

  bool operator==(const SfmObservation&) const = default;
};

struct SfmImage {
  std::uint32_t image_id = 0;
  std::array<double, 4> qvec = {1, 0, 0, 0};  // w, x, y, z; world-to-camera
  std::array<double, 3> tvec = {0, 0, 0};
  std::uint32_t camera_id = 0;
  std::string name;
  std::vector<SfmObservation> points2d;

  bool operator==(const SfmImage&) const = default;
};

struct SfmTrackEntry {
  std::uint32_t image_id = 0;
  std::uint32_t point2d_idx = 0;

  bool operator==(const SfmTrackEntry&) const = default;
};

struct SfmPoint3D {
  std::uint64_t point3d_id = 0;
  Vec3 xyz = Vec3::Zero();
  std::array<std::uint8_t, 3> rgb = {0, 0, 0};
  double reprojection_error = 0.0;  // pixels
  std::vector<SfmTrackEntry> track;

  bool operator==(const SfmPoint3D&) const = default;
};

/// Sparse reconstruction: cameras, posed images with observations, and 3D
/// points with tracking info. Maps keep entities ordered by id so every
/// traversal and serialization is deterministic.
struct SfmModel {
  std::map<std::uint32_t, SfmCamera> cameras;
  std::map<std::uint32_t, SfmImage> images;
  std::map<std::uint64_t, SfmPoint3D> points3d;
  std::vector<std::string> warnings;  // e.g. ignored distortion coefficients

  bool operator==(const SfmModel& o) const {
    return cameras == o.cameras && images == o.images && points3d == o.points3d;
  }
};

enum class SfmFormat { kBinary, kText };

/// Reads cameras/images/points3D.{bin,txt} from a model directory and
/// validates cross references. Throws ParseError with the offending byte
/// offset or entity id.
SfmModel parse_colmap(const std::string& dir, SfmFormat format);

/// Inverse of parse_colmap; binary output round-trips byte-identically.
void write_colmap(const SfmModel& model, const std::string& dir, SfmFormat format);

// Individual file codecs, exposed for fixture-level tests.
std::vector<std::uint8_t> encode_cameras_bin(const SfmModel& model);
std::vector<std::uint8_t> encode_images_bin(const SfmModel& model);
std::vector<std::uint8_t> encode_points3d_bin(const SfmModel& model);
void decode_cameras_bin(const std::vector<std::uint8_t>& bytes, SfmModel& model,
                        const std::string& origin);
void decode_images_bin(const std::vector<std::uint8_t>& bytes, SfmModel& model,
                       const std::string& origin);
void decode_points3d_bin(const std::vector<std::uint8_t>& bytes, SfmModel& model,
                         const std::string& origin);

/// Checks that every reference between images, cameras and 3D points
/// resolves; called by parse_colmap and usable on hand-built models.
void validate_sfm_model(const SfmModel& model);

/// Pinhole camera for one posed image (world-to-camera pose inverted).
/// Distortion of SIMPLE_RADIAL is ignored.
Camera camera_from_sfm(const SfmModel& model, const SfmImage& image);

/// One keypoint-depth supervision record.
struct KeypointDepth {
  std::uint32_t image_id = 0;
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;      // axial depth in world units
  double sigma_hat = 0.0;  // depth standard deviation in world units
  std::uint64_t point3d_id = 0;
};

struct KeypointConfig {
  /// Pixel-to-depth conversion for sigma_hat. > 0: fixed factor; 0 (default):
  /// per-keypoint first-order sensitivity depth / focal_length.
  double sigma_scale = 0.0;
  double sigma_floor = 1e-3;  // world units
};

/// Depth supervision for one image: every 3D point tracked by the image is
/// projected; records keep the stored 2D observation as the ray coordinate.
std::vector<KeypointDepth> extract_keypoint_depths(const SfmModel& model,
                                                   std::uint32_t image_id,
                                                   const KeypointConfig& config = {});

void write_keypoint_csv(const std::string& path, const std::vector<KeypointDepth>& keypoints);
std::vector<KeypointDepth> read_keypoint_csv(const std::string& path);

/// Synthetic stand-in for an SFM run against an analytic scene: surface
/// points sampled by ray casting, perturbed by isotropic Gaussian noise, with
/// consistent tracks and actual mean reprojection errors. Deterministic per
/// seed. Camera index i becomes image id i+1, named view_<i>.
SfmModel simulate_sfm(const AnalyticScene& scene, const std::vector<Camera>& cameras,
                      int n_points, double noise_3d, std::uint64_t seed);

}  // namespace dsvoxel
