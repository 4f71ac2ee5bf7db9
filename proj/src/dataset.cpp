// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "dsvoxel/errors.hpp"

namespace dsvoxel {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string view_stem(const char* split, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%03d", split, index);
  return buf;
}

ordered_json camera_to_json(const Camera& cam) {
  ordered_json j;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  std::vector<double> m(16);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m[4 * r + c] = cam.cam_to_world(r, c);
  }
  j["cam_to_world"] = m;
  return j;
}

Camera camera_from_json(const ordered_json& j) {
  Camera cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  const auto m = j.at("cam_to_world").get<std::vector<double>>();
  if (m.size() != 16) throw ParseError("manifest camera: cam_to_world needs 16 values");
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) cam.cam_to_world(r, c) = m[4 * r + c];
  }
  cam.validate();
  return cam;
}

}  // namespace

int SceneDataset::train_index_of(std::uint32_t view_id) const {
  for (std::size_t i = 0; i < train_views.size(); ++i) {
    if (train_views[i].view_id == static_cast<int>(view_id)) return static_cast<int>(i);
  }
  return -1;
}

SceneDataset SceneDataset::with_train_subset(int n) const {
  if (n < 1 || n > static_cast<int>(train_views.size())) {
    throw ArgumentError("train subset size out of range");
  }
  SceneDataset out = *this;
  out.train_views.assign(train_views.begin(), train_views.begin() + n);
  out.keypoints.clear();
  for (const auto& kp : keypoints) {
    if (out.train_index_of(kp.image_id) >= 0) out.keypoints.push_back(kp);
  }
  return out;
}

SceneDataset gen_dataset(const DatasetSpec& spec) {
  if (spec.train_views < 1 || spec.test_views < 1) {
    throw ArgumentError("gen_dataset: view counts must be >= 1");
  }
  const AnalyticScene scene = scene_by_name(spec.scene);

  SceneDataset ds;
  ds.scene_name = scene.name;
  ds.bbox_min = scene.bbox_min;
  ds.bbox_max = scene.bbox_max;
  arc_near_far(ds.near, ds.far);
  ds.dense_supervision = spec.dense;
  ds.sigma_dense = spec.sigma_dense;

  std::vector<Camera> train_cams = arc_train_cameras(spec.train_views, spec.resolution);
  std::vector<int> train_ids(spec.train_views);
  for (int i = 0; i < spec.train_views; ++i) train_ids[i] = i + 1;

  SfmModel model;
  if (spec.sfm == SfmSource::kExternal) {
    model = parse_colmap(spec.external_model_dir, spec.external_format);
    if (model.images.size() < static_cast<std::size_t>(spec.train_views)) {
      throw ParseError("external model has " + std::to_string(model.images.size()) +
                       " images, need " + std::to_string(spec.train_views));
    }
    // Adopt the model's first n cameras (ascending image id) as train views.
    train_cams.clear();
    train_ids.clear();
    for (const auto& [id, img] : model.images) {
      if (static_cast<int>(train_cams.size()) == spec.train_views) break;
      train_cams.push_back(camera_from_sfm(model, img));
      train_ids.push_back(static_cast<int>(id));
    }
  } else {
    ds.keypoints.reserve(static_cast<std::size_t>(spec.keypoints_per_view) * spec.train_views);
    const double noise = spec.sfm == SfmSource::kNoiseless ? 0.0 : spec.noise_3d;
    model = simulate_sfm(scene, train_cams, spec.keypoints_per_view * spec.train_views, noise,
                         spec.seed);
  }

  for (int i = 0; i < spec.train_views; ++i) {
    ViewRecord view;
    view.view_id = train_ids[i];
    view.camera = train_cams[i];
    oracle_render(scene, view.camera, view.image, view.ref_depth);
    view.image.quantize_to_8bit();
    ds.train_views.push_back(std::move(view));
  }

  int next_id = *std::max_element(train_ids.begin(), train_ids.end()) + 1;
  const auto test_cams = arc_test_cameras(spec.test_views, spec.resolution);
  for (const auto& cam : test_cams) {
    ViewRecord view;
    view.view_id = next_id++;
    view.camera = cam;
    oracle_render(scene, cam, view.image, view.ref_depth);
    view.image.quantize_to_8bit();
    ds.test_views.push_back(std::move(view));
  }

  for (int id : train_ids) {
    const auto kps =
        extract_keypoint_depths(model, static_cast<std::uint32_t>(id), spec.keypoint);
    ds.keypoints.insert(ds.keypoints.end(), kps.begin(), kps.end());
  }
  return ds;
}

void save_dataset(const SceneDataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  ordered_json manifest;
  manifest["format"] = "dsvoxel-dataset";
  manifest["version"] = 1;
  manifest["scene"] = ds.scene_name;
  manifest["near"] = ds.near;
  manifest["far"] = ds.far;
  manifest["bbox_min"] = {ds.bbox_min.x(), ds.bbox_min.y(), ds.bbox_min.z()};
  manifest["bbox_max"] = {ds.bbox_max.x(), ds.bbox_max.y(), ds.bbox_max.z()};
  manifest["dense_supervision"] = ds.dense_supervision;
  manifest["sigma_dense"] = ds.sigma_dense;
  manifest["keypoints_csv"] = "keypoints.csv";

  ordered_json views = ordered_json::array();
  auto emit_split = [&](const std::vector<ViewRecord>& split, const char* label) {
    for (std::size_t i = 0; i < split.size(); ++i) {
      const ViewRecord& view = split[i];
      const std::string stem = view_stem(label, static_cast<int>(i));
      write_ppm(dir + "/" + stem + ".ppm", view.image);
      write_depth_map(dir + "/" + stem + ".dsdm", view.ref_depth);
      ordered_json j;
      j["id"] = view.view_id;
      j["split"] = label;
      j["image"] = stem + ".ppm";
      j["depth"] = stem + ".dsdm";
      j["camera"] = camera_to_json(view.camera);
      views.push_back(std::move(j));
    }
  };
  emit_split(ds.train_views, "train");
  emit_split(ds.test_views, "test");
  manifest["views"] = std::move(views);

  write_keypoint_csv(dir + "/keypoints.csv", ds.keypoints);

  std::ofstream out(dir + "/manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot open '" + dir + "/manifest.json' for writing");
  out << manifest.dump(2) << '\n';
}

SceneDataset load_dataset(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw IoError("cannot open '" + dir + "/manifest.json' for reading");
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(dir + "/manifest.json: " + e.what());
  }
  if (manifest.value("format", "") != "dsvoxel-dataset") {
    throw ParseError(dir + "/manifest.json: not a dsvoxel dataset manifest");
  }

  SceneDataset ds;
  try {
    ds.scene_name = manifest.at("scene").get<std::string>();
    ds.near = manifest.at("near").get<double>();
    ds.far = manifest.at("far").get<double>();
    const auto lo = manifest.at("bbox_min").get<std::vector<double>>();
    const auto hi = manifest.at("bbox_max").get<std::vector<double>>();
    if (lo.size() != 3 || hi.size() != 3) throw ParseError("manifest bbox needs 3 values");
    ds.bbox_min = Vec3(lo[0], lo[1], lo[2]);
    ds.bbox_max = Vec3(hi[0], hi[1], hi[2]);
    ds.dense_supervision = manifest.at("dense_supervision").get<bool>();
    ds.sigma_dense = manifest.at("sigma_dense").get<double>();

    for (const auto& j : manifest.at("views")) {
      ViewRecord view;
      view.view_id = j.at("id").get<int>();
      view.camera = camera_from_json(j.at("camera"));
      view.image = read_ppm(dir + "/" + j.at("image").get<std::string>());
      view.ref_depth = read_depth_map(dir + "/" + j.at("depth").get<std::string>());
      if (view.image.width != view.camera.width || view.image.height != view.camera.height) {
        throw ParseError("view " + std::to_string(view.view_id) + ": image size mismatch");
      }
      const std::string split = j.at("split").get<std::string>();
      if (split == "train") {
        ds.train_views.push_back(std::move(view));
      } else if (split == "test") {
        ds.test_views.push_back(std::move(view));
      } else {
        throw ParseError("view " + std::to_string(view.view_id) + ": unknown split '" + split +
                         "'");
      }
    }
    ds.keypoints = read_keypoint_csv(dir + "/" + manifest.at("keypoints_csv").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(dir + "/manifest.json: " + e.what());
  }

  for (const auto& kp : ds.keypoints) {
    if (ds.train_index_of(kp.image_id) < 0) {
      throw ParseError("keypoint references unknown train view " + std::to_string(kp.image_id));
    }
  }
  return ds;
}

}  // namespace dsvoxel
