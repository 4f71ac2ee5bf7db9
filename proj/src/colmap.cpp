// SPDX-License-Identifier: Apache-2.0
#include "dsvoxel/colmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dsvoxel/binary_io.hpp"
#include "dsvoxel/errors.hpp"
#include "dsvoxel/random.hpp"
#include "dsvoxel/strings.hpp"

namespace dsvoxel {

namespace {

std::size_t model_param_count(SfmCameraModel model) {
  switch (model) {
    case SfmCameraModel::kSimplePinhole: return 3;
    case SfmCameraModel::kPinhole: return 4;
    case SfmCameraModel::kSimpleRadial: return 4;
  }
  return 0;
}

std::string model_name(SfmCameraModel model) {
  switch (model) {
    case SfmCameraModel::kSimplePinhole: return "SIMPLE_PINHOLE";
    case SfmCameraModel::kPinhole: return "PINHOLE";
    case SfmCameraModel::kSimpleRadial: return "SIMPLE_RADIAL";
  }
  return "?";
}

SfmCameraModel model_from_id(std::int32_t id, const std::string& origin,
                             std::uint32_t camera_id) {
  if (id < 0 || id > 2) {
    throw ParseError(origin + ": unsupported camera model id " + std::to_string(id) +
                     " (camera " + std::to_string(camera_id) + ")");
  }
  return static_cast<SfmCameraModel>(id);
}

SfmCameraModel model_from_name(const std::string& name, const std::string& origin,
                               std::uint32_t camera_id) {
  if (name == "SIMPLE_PINHOLE") return SfmCameraModel::kSimplePinhole;
  if (name == "PINHOLE") return SfmCameraModel::kPinhole;
  if (name == "SIMPLE_RADIAL") return SfmCameraModel::kSimpleRadial;
  throw ParseError(origin + ": unsupported camera model '" + name + "' (camera " +
                   std::to_string(camera_id) + ")");
}

void note_radial_warning(SfmModel& model, const SfmCamera& cam) {
  if (cam.model == SfmCameraModel::kSimpleRadial) {
    model.warnings.push_back("camera " + std::to_string(cam.camera_id) +
                             ": SIMPLE_RADIAL distortion coefficient ignored");
  }
}

}  // namespace

// --- binary codecs ---------------------------------------------------------

std::vector<std::uint8_t> encode_cameras_bin(const SfmModel& model) {
  BinaryWriter w;
  w.u64(model.cameras.size());
  for (const auto& [id, cam] : model.cameras) {
    w.u32(id);
    w.i32(static_cast<std::int32_t>(cam.model));
    w.u64(cam.width);
    w.u64(cam.height);
    for (double p : cam.params) w.f64(p);
  }
  return w.data();
}

std::vector<std::uint8_t> encode_images_bin(const SfmModel& model) {
  BinaryWriter w;
  w.u64(model.images.size());
  for (const auto& [id, img] : model.images) {
    w.u32(id);
    for (double q : img.qvec) w.f64(q);
    for (double t : img.tvec) w.f64(t);
    w.u32(img.camera_id);
    w.cstring(img.name);
    w.u64(img.points2d.size());
    for (const auto& p : img.points2d) {
      w.f64(p.x);
      w.f64(p.y);
      w.u64(p.point3d_id);
    }
  }
  return w.data();
}

std::vector<std::uint8_t> encode_points3d_bin(const SfmModel& model) {
  BinaryWriter w;
  w.u64(model.points3d.size());
  for (const auto& [id, pt] : model.points3d) {
    w.u64(id);
    for (int i = 0; i < 3; ++i) w.f64(pt.xyz[i]);
    for (std::uint8_t c : pt.rgb) w.u8(c);
    w.f64(pt.reprojection_error);
    w.u64(pt.track.size());
    for (const auto& e : pt.track) {
      w.u32(e.image_id);
      w.u32(e.point2d_idx);
    }
  }
  return w.data();
}

void decode_cameras_bin(const std::vector<std::uint8_t>& bytes, SfmModel& model,
                        const std::string& origin) {
  BinaryReader r(bytes, origin);
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    SfmCamera cam;
    cam.camera_id = r.u32();
    cam.model = model_from_id(r.i32(), origin, cam.camera_id);
    cam.width = r.u64();
    cam.height = r.u64();
    cam.params.resize(model_param_count(cam.model));
    for (double& p : cam.params) p = r.f64();
    note_radial_warning(model, cam);
    model.cameras.emplace(cam.camera_id, std::move(cam));
  }
  r.expect_end();
}

void decode_images_bin(const std::vector<std::uint8_t>& bytes, SfmModel& model,
                       const std::string& origin) {
  BinaryReader r(bytes, origin);
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    SfmImage img;
    img.image_id = r.u32();
    for (double& q : img.qvec) q = r.f64();
    for (double& t : img.tvec) t = r.f64();
    img.camera_id = r.u32();
    img.name = r.cstring();
    const std::uint64_t n2d = r.u64();
    img.points2d.resize(n2d);
    for (auto& p : img.points2d) {
      p.x = r.f64();
      p.y = r.f64();
      p.point3d_id = r.u64();
    }
    model.images.emplace(img.image_id, std::move(img));
  }
  r.expect_end();
}

void decode_points3d_bin(const std::vector<std::uint8_t>& bytes, SfmModel& model,
                         const std::string& origin) {
  BinaryReader r(bytes, origin);
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    SfmPoint3D pt;
    pt.point3d_id = r.u64();
    for (int k = 0; k < 3; ++k) pt.xyz[k] = r.f64();
    for (std::uint8_t& c : pt.rgb) c = r.u8();
    pt.reprojection_error = r.f64();
    const std::uint64_t track_len = r.u64();
    pt.track.resize(track_len);
    for (auto& e : pt.track) {
      e.image_id = r.u32();
      e.point2d_idx = r.u32();
    }
    model.points3d.emplace(pt.point3d_id, std::move(pt));
  }
  r.expect_end();
}

// --- text codecs ------------------------------------------------------------

namespace {

std::vector<std::string> data_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

bool skippable(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;  // blank
}

std::vector<std::string_view> fields(const std::string& line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(std::string_view(line).substr(start, i - start));
  }
  return out;
}

void parse_cameras_txt(const std::string& path, SfmModel& model) {
  for (const auto& line : data_lines(path)) {
    if (skippable(line)) continue;
    const auto f = fields(line);
    if (f.size() < 4) throw ParseError(path + ": malformed camera line '" + line + "'");
    SfmCamera cam;
    cam.camera_id = static_cast<std::uint32_t>(parse_u64(f[0]));
    cam.model = model_from_name(std::string(f[1]), path, cam.camera_id);
    cam.width = parse_u64(f[2]);
    cam.height = parse_u64(f[3]);
    const std::size_t n = model_param_count(cam.model);
    if (f.size() != 4 + n) {
      throw ParseError(path + ": camera " + std::to_string(cam.camera_id) + " expects " +
                       std::to_string(n) + " params, got " + std::to_string(f.size() - 4));
    }
    for (std::size_t i = 0; i < n; ++i) cam.params.push_back(parse_double(f[4 + i]));
    note_radial_warning(model, cam);
    model.cameras.emplace(cam.camera_id, std::move(cam));
  }
}

void parse_images_txt(const std::string& path, SfmModel& model) {
  const auto lines = data_lines(path);
  std::size_t i = 0;
  while (i < lines.size()) {
    if (skippable(lines[i])) {
      ++i;
      continue;
    }
    const auto f = fields(lines[i]);
    if (f.size() != 10) throw ParseError(path + ": malformed image line '" + lines[i] + "'");
    SfmImage img;
    img.image_id = static_cast<std::uint32_t>(parse_u64(f[0]));
    for (int k = 0; k < 4; ++k) img.qvec[k] = parse_double(f[1 + k]);
    for (int k = 0; k < 3; ++k) img.tvec[k] = parse_double(f[5 + k]);
    img.camera_id = static_cast<std::uint32_t>(parse_u64(f[8]));
    img.name = std::string(f[9]);
    ++i;
    if (i >= lines.size()) {
      throw ParseError(path + ": image " + std::to_string(img.image_id) +
                       " missing its observations line");
    }
    const auto obs = fields(lines[i]);
    if (obs.size() % 3 != 0) {
      throw ParseError(path + ": image " + std::to_string(img.image_id) +
                       " observation count not a multiple of 3");
    }
    for (std::size_t k = 0; k < obs.size(); k += 3) {
      SfmObservation o;
      o.x = parse_double(obs[k]);
      o.y = parse_double(obs[k + 1]);
      if (obs[k + 2] == "-1") {
        o.point3d_id = kInvalidPoint3dId;
      } else {
        o.point3d_id = parse_u64(obs[k + 2]);
      }
      img.points2d.push_back(o);
    }
    ++i;
    model.images.emplace(img.image_id, std::move(img));
  }
}

void parse_points3d_txt(const std::string& path, SfmModel& model) {
  for (const auto& line : data_lines(path)) {
    if (skippable(line)) continue;
    const auto f = fields(line);
    if (f.size() < 8 || (f.size() - 8) % 2 != 0) {
      throw ParseError(path + ": malformed 3D point line '" + line + "'");
    }
    SfmPoint3D pt;
    pt.point3d_id = parse_u64(f[0]);
    for (int k = 0; k < 3; ++k) pt.xyz[k] = parse_double(f[1 + k]);
    for (int k = 0; k < 3; ++k) pt.rgb[k] = static_cast<std::uint8_t>(parse_u64(f[4 + k]));
    pt.reprojection_error = parse_double(f[7]);
    for (std::size_t k = 8; k < f.size(); k += 2) {
      SfmTrackEntry e;
      e.image_id = static_cast<std::uint32_t>(parse_u64(f[k]));
      e.point2d_idx = static_cast<std::uint32_t>(parse_u64(f[k + 1]));
      pt.track.push_back(e);
    }
    model.points3d.emplace(pt.point3d_id, std::move(pt));
  }
}

void write_cameras_txt(const SfmModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "# Camera list with one line of data per camera:\n"
      << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
  for (const auto& [id, cam] : model.cameras) {
    out << id << ' ' << model_name(cam.model) << ' ' << cam.width << ' ' << cam.height;
    for (double p : cam.params) out << ' ' << format_double(p);
    out << '\n';
  }
}

void write_images_txt(const SfmModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "# Image list with two lines of data per image:\n"
      << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
      << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n";
  for (const auto& [id, img] : model.images) {
    out << id;
    for (double q : img.qvec) out << ' ' << format_double(q);
    for (double t : img.tvec) out << ' ' << format_double(t);
    out << ' ' << img.camera_id << ' ' << img.name << '\n';
    bool first = true;
    for (const auto& p : img.points2d) {
      if (!first) out << ' ';
      first = false;
      out << format_double(p.x) << ' ' << format_double(p.y) << ' ';
      if (p.point3d_id == kInvalidPoint3dId) {
        out << "-1";
      } else {
        out << p.point3d_id;
      }
    }
    out << '\n';
  }
}

void write_points3d_txt(const SfmModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "# 3D point list with one line of data per point:\n"
      << "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n";
  for (const auto& [id, pt] : model.points3d) {
    out << id;
    for (int k = 0; k < 3; ++k) out << ' ' << format_double(pt.xyz[k]);
    for (int k = 0; k < 3; ++k) out << ' ' << static_cast<int>(pt.rgb[k]);
    out << ' ' << format_double(pt.reprojection_error);
    for (const auto& e : pt.track) out << ' ' << e.image_id << ' ' << e.point2d_idx;
    out << '\n';
  }
}

}  // namespace

void validate_sfm_model(const SfmModel& model) {
  for (const auto& [id, img] : model.images) {
    if (!model.cameras.count(img.camera_id)) {
      throw ParseError("image " + std::to_string(id) + " references missing camera " +
                       std::to_string(img.camera_id));
    }
    for (std::size_t k = 0; k < img.points2d.size(); ++k) {
      const std::uint64_t pid = img.points2d[k].point3d_id;
      if (pid != kInvalidPoint3dId && !model.points3d.count(pid)) {
        throw ParseError("image " + std::to_string(id) + " 2D point " + std::to_string(k) +
                         " references missing 3D point " + std::to_string(pid));
      }
    }
  }
  for (const auto& [id, pt] : model.points3d) {
    if (!(pt.reprojection_error >= 0.0)) {
      throw ParseError("3D point " + std::to_string(id) + " has negative reprojection error");
    }
    for (const auto& e : pt.track) {
      const auto it = model.images.find(e.image_id);
      if (it == model.images.end()) {
        throw ParseError("3D point " + std::to_string(id) + " track references missing image " +
                         std::to_string(e.image_id));
      }
      if (e.point2d_idx >= it->second.points2d.size()) {
        throw ParseError("3D point " + std::to_string(id) +
                         " track references out-of-range observation " +
                         std::to_string(e.point2d_idx) + " of image " +
                         std::to_string(e.image_id));
      }
    }
  }
}

SfmModel parse_colmap(const std::string& dir, SfmFormat format) {
  SfmModel model;
  if (format == SfmFormat::kBinary) {
    decode_cameras_bin(read_file_bytes(dir + "/cameras.bin"), model, dir + "/cameras.bin");
    decode_images_bin(read_file_bytes(dir + "/images.bin"), model, dir + "/images.bin");
    decode_points3d_bin(read_file_bytes(dir + "/points3D.bin"), model, dir + "/points3D.bin");
  } else {
    parse_cameras_txt(dir + "/cameras.txt", model);
    parse_images_txt(dir + "/images.txt", model);
    parse_points3d_txt(dir + "/points3D.txt", model);
  }
  validate_sfm_model(model);
  return model;
}

void write_colmap(const SfmModel& model, const std::string& dir, SfmFormat format) {
  if (format == SfmFormat::kBinary) {
    write_file_bytes(dir + "/cameras.bin", encode_cameras_bin(model));
    write_file_bytes(dir + "/images.bin", encode_images_bin(model));
    write_file_bytes(dir + "/points3D.bin", encode_points3d_bin(model));
  } else {
    write_cameras_txt(model, dir + "/cameras.txt");
    write_images_txt(model, dir + "/images.txt");
    write_points3d_txt(model, dir + "/points3D.txt");
  }
}

Camera camera_from_sfm(const SfmModel& model, const SfmImage& image) {
  const auto it = model.cameras.find(image.camera_id);
  if (it == model.cameras.end()) {
    throw ParseError("image " + std::to_string(image.image_id) + " references missing camera " +
                     std::to_string(image.camera_id));
  }
  const SfmCamera& sfm_cam = it->second;
  Camera cam;
  switch (sfm_cam.model) {
    case SfmCameraModel::kSimplePinhole:
    case SfmCameraModel::kSimpleRadial:
      cam.fx = cam.fy = sfm_cam.params[0];
      cam.cx = sfm_cam.params[1];
      cam.cy = sfm_cam.params[2];
      break;
    case SfmCameraModel::kPinhole:
      cam.fx = sfm_cam.params[0];
      cam.fy = sfm_cam.params[1];
      cam.cx = sfm_cam.params[2];
      cam.cy = sfm_cam.params[3];
      break;
  }
  cam.width = static_cast<int>(sfm_cam.width);
  cam.height = static_cast<int>(sfm_cam.height);

  const Mat3 world_to_cam = quat_to_rotation(image.qvec);
  const Vec3 tvec(image.tvec[0], image.tvec[1], image.tvec[2]);
  cam.cam_to_world = Mat4::Identity();
  cam.cam_to_world.topLeftCorner<3, 3>() = world_to_cam.transpose();
  cam.cam_to_world.topRightCorner<3, 1>() = -world_to_cam.transpose() * tvec;
  cam.validate();
  return cam;
}

std::vector<KeypointDepth> extract_keypoint_depths(const SfmModel& model,
                                                   std::uint32_t image_id,
                                                   const KeypointConfig& config) {
  const auto img_it = model.images.find(image_id);
  if (img_it == model.images.end()) {
    throw ArgumentError("extract_keypoint_depths: unknown image id " + std::to_string(image_id));
  }
  const SfmImage& image = img_it->second;
  const Camera camera = camera_from_sfm(model, image);

  std::vector<KeypointDepth> out;
  for (const auto& [pid, pt] : model.points3d) {
    const SfmTrackEntry* entry = nullptr;
    for (const auto& e : pt.track) {
      if (e.image_id == image_id) {
        entry = &e;
        break;
      }
    }
    if (!entry) continue;  // keypoint not visible from this view

    const Projection proj = project_point_depth(camera, pt.xyz);
    if (!proj.in_front) continue;
    if (proj.u < 0.0 || proj.u > camera.width || proj.v < 0.0 || proj.v > camera.height) {
      continue;
    }
    const SfmObservation& obs = image.points2d[entry->point2d_idx];
    if (obs.x < 0.0 || obs.x > camera.width || obs.y < 0.0 || obs.y > camera.height) {
      continue;
    }

    KeypointDepth kp;
    kp.image_id = image_id;
    kp.u = obs.x;
    kp.v = obs.y;
    kp.depth = proj.depth;
    const double scale = config.sigma_scale > 0.0 ? config.sigma_scale : proj.depth / camera.fx;
    kp.sigma_hat = std::max(scale * pt.reprojection_error, config.sigma_floor);
    kp.point3d_id = pid;
    out.push_back(kp);
  }
  return out;
}

void write_keypoint_csv(const std::string& path, const std::vector<KeypointDepth>& keypoints) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "image_id,u,v,D,sigma_hat,point3d_id\n";
  for (const auto& kp : keypoints) {
    out << kp.image_id << ',' << format_double(kp.u) << ',' << format_double(kp.v) << ','
        << format_double(kp.depth) << ',' << format_double(kp.sigma_hat) << ',' << kp.point3d_id
        << '\n';
  }
}

std::vector<KeypointDepth> read_keypoint_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line) || split(line, ',').size() != 6) {
    throw ParseError(path + ": missing keypoint CSV header");
  }
  std::vector<KeypointDepth> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) throw ParseError(path + ": malformed row '" + line + "'");
    KeypointDepth kp;
    kp.image_id = static_cast<std::uint32_t>(parse_u64(f[0]));
    kp.u = parse_double(f[1]);
    kp.v = parse_double(f[2]);
    kp.depth = parse_double(f[3]);
    kp.sigma_hat = parse_double(f[4]);
    kp.point3d_id = parse_u64(f[5]);
    out.push_back(kp);
  }
  return out;
}

SfmModel simulate_sfm(const AnalyticScene& scene, const std::vector<Camera>& cameras,
                      int n_points, double noise_3d, std::uint64_t seed) {
  if (n_points < 1) throw ArgumentError("simulate_sfm: need at least one point");
  if (cameras.empty()) throw ArgumentError("simulate_sfm: need at least one camera");

  SfmModel model;
  // All arc cameras share intrinsics; one camera record, COLMAP-style.
  const Camera& intr = cameras.front();
  SfmCamera shared;
  shared.camera_id = 1;
  shared.model = SfmCameraModel::kPinhole;
  shared.width = static_cast<std::uint64_t>(intr.width);
  shared.height = static_cast<std::uint64_t>(intr.height);
  shared.params = {intr.fx, intr.fy, intr.cx, intr.cy};
  model.cameras.emplace(shared.camera_id, shared);

  for (std::size_t i = 0; i < cameras.size(); ++i) {
    SfmImage img;
    img.image_id = static_cast<std::uint32_t>(i + 1);
    const Mat3 world_to_cam = cameras[i].rotation().transpose();
    img.qvec = rotation_to_quat(world_to_cam);
    const Vec3 t = -world_to_cam * cameras[i].center();
    img.tvec = {t.x(), t.y(), t.z()};
    img.camera_id = shared.camera_id;
    img.name = "view_" + std::to_string(i);
    model.images.emplace(img.image_id, std::move(img));
  }

  Rng rng(seed);
  std::uint64_t next_point_id = 1;
  int produced = 0;
  int attempts = 0;
  const int max_attempts = n_points * 64;
  while (produced < n_points && attempts < max_attempts) {
    ++attempts;
    // Sample a surface point through a random pixel of a random view.
    const std::size_t cam_idx = rng.index(cameras.size());
    const Camera& cam = cameras[cam_idx];
    const double u = rng.uniform(0.0, cam.width);
    const double v = rng.uniform(0.0, cam.height);
    const Vec3 dir_cam((u - cam.cx) / cam.fx, -(v - cam.cy) / cam.fy, -1.0);
    const Vec3 dir = cam.rotation() * dir_cam;
    const auto hit = scene.intersect(cam.center(), dir);
    if (!hit) continue;
    const Vec3 surface = cam.center() + hit->t * dir;

    Vec3 noisy = surface;
    for (int k = 0; k < 3; ++k) noisy[k] += noise_3d * rng.normal();

    // Track: the point is observed wherever the true surface point is
    // visible; detected coordinates are the true projections.
    SfmPoint3D pt;
    pt.point3d_id = next_point_id;
    pt.xyz = noisy;
    const Vec3 col = hit->rgb * 255.0;
    for (int k = 0; k < 3; ++k) {
      pt.rgb[k] = static_cast<std::uint8_t>(std::clamp(col[k], 0.0, 255.0));
    }

    std::vector<std::pair<std::uint32_t, Vec2>> observations;
    for (std::size_t j = 0; j < cameras.size(); ++j) {
      const Projection proj = project_point_depth(cameras[j], surface);
      if (!proj.in_front) continue;
      if (proj.u < 0.0 || proj.u > cameras[j].width || proj.v < 0.0 ||
          proj.v > cameras[j].height) {
        continue;
      }
      // Occlusion: the oracle ray through the projection must hit the same
      // depth, not a nearer surface.
      const Vec3 vis_dir_cam((proj.u - cameras[j].cx) / cameras[j].fx,
                             -(proj.v - cameras[j].cy) / cameras[j].fy, -1.0);
      const Vec3 vis_dir = cameras[j].rotation() * vis_dir_cam;
      const auto vis_hit = scene.intersect(cameras[j].center(), vis_dir);
      if (!vis_hit || std::abs(vis_hit->t - proj.depth) > 1e-6 * proj.depth) continue;
      observations.emplace_back(static_cast<std::uint32_t>(j + 1), Vec2(proj.u, proj.v));
    }
    if (observations.empty()) continue;

    double err_sum = 0.0;
    for (const auto& [image_id, obs_uv] : observations) {
      SfmImage& img = model.images.at(image_id);
      SfmTrackEntry entry;
      entry.image_id = image_id;
      entry.point2d_idx = static_cast<std::uint32_t>(img.points2d.size());
      img.points2d.push_back({obs_uv.x(), obs_uv.y(), pt.point3d_id});
      pt.track.push_back(entry);

      const Projection reproj = project_point_depth(cameras[image_id - 1], noisy);
      err_sum += (Vec2(reproj.u, reproj.v) - obs_uv).norm();
    }
    pt.reprojection_error = err_sum / static_cast<double>(observations.size());
    model.points3d.emplace(pt.point3d_id, std::move(pt));
    ++next_point_id;
    ++produced;
  }

  for (const auto& [id, img] : model.images) {
    if (img.points2d.empty()) {
      model.warnings.push_back("image " + std::to_string(id) +
                               " observed no surface points");
    }
  }
  validate_sfm_model(model);
  return model;
}

}  // namespace dsvoxel
