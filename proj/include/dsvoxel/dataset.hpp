// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsvoxel/colmap.hpp"
#include "dsvoxel/image.hpp"
#include "dsvoxel/scene.hpp"

namespace dsvoxel {

struct ViewRecord {
  int view_id = 0;  // unique across splits
  Camera camera;
  Image image;         // 8-bit quantized, matching the PPM on disk
  DepthMap ref_depth;  // oracle axial depth; 0 marks misses
};

/// Posed views plus keypoint supervision for one scene. Keypoint image_id
/// values reference train view ids. Train-view reference depths exist for
/// evaluation alignment; they only become supervision when dense_supervision
/// is set.
struct SceneDataset {
  std::string scene_name;
  std::vector<ViewRecord> train_views;
  std::vector<ViewRecord> test_views;
  std::vector<KeypointDepth> keypoints;
  double near = 0.0;
  double far = 0.0;
  Vec3 bbox_min = Vec3::Zero();
  Vec3 bbox_max = Vec3::Ones();
  bool dense_supervision = false;
  double sigma_dense = 0.05;

  /// Index into train_views for a keypoint's image id; -1 if absent.
  int train_index_of(std::uint32_t view_id) const;

  /// Copy restricted to the first n train views (keypoints filtered too).
  SceneDataset with_train_subset(int n) const;
};

enum class SfmSource { kNoiseless, kSimulated, kExternal };

struct DatasetSpec {
  std::string scene = "sphere-plane";
  int train_views = 2;
  int test_views = 3;
  int resolution = 64;
  SfmSource sfm = SfmSource::kNoiseless;
  double noise_3d = 0.0;                    // kSimulated only
  int keypoints_per_view = 150;             // simulator target count per train view
  std::string external_model_dir;           // kExternal only
  SfmFormat external_format = SfmFormat::kBinary;
  bool dense = false;                       // attach dense depth supervision
  double sigma_dense = 0.05;
  std::uint64_t seed = 1;
  KeypointConfig keypoint;
};

/// Renders ground-truth views with the analytic oracle and attaches keypoint
/// supervision from the selected SFM source. Deterministic per seed.
SceneDataset gen_dataset(const DatasetSpec& spec);

/// Writes manifest.json, PPM images, DSDM depth maps and keypoints.csv.
/// write -> read -> write is byte-identical.
void save_dataset(const SceneDataset& dataset, const std::string& dir);
SceneDataset load_dataset(const std::string& dir);

}  // namespace dsvoxel
