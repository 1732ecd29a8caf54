// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#include "occkit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <unordered_set>

#include <json.hpp>

#include "occkit/errors.hpp"

namespace occkit {

using nlohmann::json;

void PointCloud::validate() const {
  const std::size_t n = points.size();
  if (intensities && intensities->size() != n) {
    throw ValidationError("intensity column length differs from point count");
  }
  if (rings && rings->size() != n) {
    throw ValidationError("ring column length differs from point count");
  }
  if (labels && labels->size() != n) {
    throw ValidationError("label column length differs from point count");
  }
}

const FrameRecord* FrameIndex::find_frame(const std::string& frame_id) const {
  for (const Scene& scene : scenes) {
    for (const FrameRecord& frame : scene.frames) {
      if (frame.frame_id == frame_id) return &frame;
    }
  }
  return nullptr;
}

const Scene* FrameIndex::find_scene(const std::string& scene_id) const {
  for (const Scene& scene : scenes) {
    if (scene.scene_id == scene_id) return &scene;
  }
  return nullptr;
}

std::size_t FrameIndex::frame_count() const {
  std::size_t n = 0;
  for (const Scene& scene : scenes) n += scene.frames.size();
  return n;
}

namespace {

const json& require_key(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(ctx + ": missing key '" + key + "'");
  return *it;
}

Point3 parse_vec3(const json& arr, const std::string& ctx) {
  if (!arr.is_array() || arr.size() != 3) throw ValidationError(ctx + ": expected a 3-element array");
  return Point3{arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

PoseSE3 parse_pose(const json& obj, const std::string& ctx) {
  const json& t = require_key(obj, "t", ctx);
  const json& q = require_key(obj, "q", ctx);
  if (!q.is_array() || q.size() != 4) throw ValidationError(ctx + ": 'q' must be [w,x,y,z]");
  const Point3 translation = parse_vec3(t, ctx + ".t");
  try {
    return PoseSE3{Quaternion{q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                              q[3].get<double>()},
                   translation};
  } catch (const ValidationError& e) {
    throw ValidationError(ctx + ": " + e.what());
  }
}

BoxAnnotation parse_box(const json& obj, const std::string& ctx) {
  BoxAnnotation box;
  box.track_id = require_key(obj, "track_id", ctx).get<std::string>();
  const std::string bctx = ctx + " box '" + box.track_id + "'";
  box.center = parse_vec3(require_key(obj, "center", bctx), bctx + ".center");
  const json& size = require_key(obj, "size", bctx);
  if (!size.is_array() || size.size() != 3) throw ValidationError(bctx + ": 'size' must be [w,l,h]");
  box.width = size[0].get<double>();
  box.length = size[1].get<double>();
  box.height = size[2].get<double>();
  box.yaw = require_key(obj, "yaw", bctx).get<double>();
  box.class_id = require_key(obj, "class_id", bctx).get<int>();
  if (!(box.width > 0.0) || !(box.length > 0.0) || !(box.height > 0.0)) {
    throw ValidationError(bctx + ": size components must be > 0");
  }
  if (!(box.yaw >= -std::numbers::pi && box.yaw <= std::numbers::pi)) {
    throw ValidationError(bctx + ": yaw must lie in [-pi, pi]");
  }
  return box;
}

}  // namespace

FrameIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open index: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("index " + path.string() + ": " + e.what());
  }

  FrameIndex index;
  std::unordered_set<std::string> seen_frames;
  const json& scenes = require_key(doc, "scenes", "index");
  for (const json& jscene : scenes) {
    Scene scene;
    scene.scene_id = require_key(jscene, "scene_id", "scene").get<std::string>();
    const std::string sctx = "scene '" + scene.scene_id + "'";
    bool has_keyframe = false;
    std::int64_t prev_ts = 0;
    bool first = true;
    for (const json& jframe : require_key(jscene, "frames", sctx)) {
      FrameRecord frame;
      frame.scene_id = scene.scene_id;
      frame.frame_id = require_key(jframe, "frame_id", sctx).get<std::string>();
      const std::string fctx = "frame '" + frame.frame_id + "'";
      if (!seen_frames.insert(frame.frame_id).second) {
        throw ValidationError("duplicate frame id '" + frame.frame_id + "'");
      }
      frame.timestamp_us = require_key(jframe, "timestamp_us", fctx).get<std::int64_t>();
      frame.is_keyframe = require_key(jframe, "is_keyframe", fctx).get<bool>();
      frame.cloud_path = require_key(jframe, "cloud_path", fctx).get<std::string>();
      frame.ego_to_global = parse_pose(require_key(jframe, "ego_to_global", fctx), fctx + ".ego_to_global");
      frame.lidar_to_ego = parse_pose(require_key(jframe, "lidar_to_ego", fctx), fctx + ".lidar_to_ego");
      if (auto it = jframe.find("boxes"); it != jframe.end() && !it->is_null()) {
        std::vector<BoxAnnotation> boxes;
        for (const json& jbox : *it) boxes.push_back(parse_box(jbox, fctx));
        frame.boxes = std::move(boxes);
      }
      if (!first && frame.timestamp_us <= prev_ts) {
        throw ValidationError(sctx + ": timestamps not strictly increasing at frame '" +
                              frame.frame_id + "'");
      }
      prev_ts = frame.timestamp_us;
      first = false;
      has_keyframe = has_keyframe || frame.is_keyframe;
      scene.frames.push_back(std::move(frame));
    }
    if (scene.frames.empty()) throw ValidationError(sctx + ": no frames");
    if (!has_keyframe) throw ValidationError(sctx + ": scene has no keyframe");
    index.scenes.push_back(std::move(scene));
  }
  return index;
}

void write_index(const FrameIndex& index, const std::filesystem::path& path) {
  json doc;
  doc["scenes"] = json::array();
  for (const Scene& scene : index.scenes) {
    json jscene;
    jscene["scene_id"] = scene.scene_id;
    jscene["frames"] = json::array();
    for (const FrameRecord& frame : scene.frames) {
      json jf;
      jf["frame_id"] = frame.frame_id;
      jf["timestamp_us"] = frame.timestamp_us;
      jf["is_keyframe"] = frame.is_keyframe;
      jf["cloud_path"] = frame.cloud_path;
      auto pose_to_json = [](const PoseSE3& p) {
        const Quaternion& q = p.rotation();
        const Point3& t = p.translation();
        return json{{"t", {t.x, t.y, t.z}}, {"q", {q.w, q.x, q.y, q.z}}};
      };
      jf["ego_to_global"] = pose_to_json(frame.ego_to_global);
      jf["lidar_to_ego"] = pose_to_json(frame.lidar_to_ego);
      if (frame.boxes) {
        json jboxes = json::array();
        for (const BoxAnnotation& box : *frame.boxes) {
          jboxes.push_back(json{{"track_id", box.track_id},
                                {"center", {box.center.x, box.center.y, box.center.z}},
                                {"size", {box.width, box.length, box.height}},
                                {"yaw", box.yaw},
                                {"class_id", box.class_id}});
        }
        jf["boxes"] = std::move(jboxes);
      }
      jscene["frames"].push_back(std::move(jf));
    }
    doc["scenes"].push_back(std::move(jscene));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("short write: " + path.string());
}

std::filesystem::path label_path_for(const std::filesystem::path& cloud_path) {
  std::filesystem::path p = cloud_path;
  p.replace_extension(".labels");
  return p;
}

namespace {

constexpr std::size_t kRecordBytes = 5 * sizeof(float);

float read_f32(const std::uint8_t* p) {
  std::uint32_t u = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                    (static_cast<std::uint32_t>(p[2]) << 16) |
                    (static_cast<std::uint32_t>(p[3]) << 24);
  float f;
  std::memcpy(&f, &u, sizeof f);
  return f;
}

void append_f32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, sizeof u);
  out.push_back(static_cast<std::uint8_t>(u & 0xff));
  out.push_back(static_cast<std::uint8_t>((u >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((u >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((u >> 24) & 0xff));
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

}  // namespace

CloudLoadResult load_cloud(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> buf = read_all(path);
  if (buf.size() % kRecordBytes != 0) {
    const std::size_t whole = buf.size() / kRecordBytes;
    throw IoError("cloud " + path.string() + ": " + std::to_string(buf.size()) +
                  " bytes is not a multiple of the " + std::to_string(kRecordBytes) +
                  "-byte record; expected " + std::to_string(whole * kRecordBytes) + " or " +
                  std::to_string((whole + 1) * kRecordBytes));
  }
  const std::size_t records = buf.size() / kRecordBytes;

  std::vector<std::uint8_t> raw_labels;
  bool have_labels = false;
  const std::filesystem::path lpath = label_path_for(path);
  if (std::filesystem::exists(lpath)) {
    raw_labels = read_all(lpath);
    if (raw_labels.size() != records) {
      throw IoError("labels " + lpath.string() + ": " + std::to_string(raw_labels.size()) +
                    " entries for " + std::to_string(records) + " points");
    }
    have_labels = true;
  }

  CloudLoadResult result;
  PointCloud& cloud = result.cloud;
  cloud.points.reserve(records);
  cloud.intensities.emplace();
  cloud.intensities->reserve(records);
  cloud.rings.emplace();
  cloud.rings->reserve(records);
  if (have_labels) {
    cloud.labels.emplace();
    cloud.labels->reserve(records);
  }
  for (std::size_t r = 0; r < records; ++r) {
    const std::uint8_t* rec = buf.data() + r * kRecordBytes;
    const float x = read_f32(rec + 0);
    const float y = read_f32(rec + 4);
    const float z = read_f32(rec + 8);
    const float intensity = read_f32(rec + 12);
    const float ring = read_f32(rec + 16);
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) || !std::isfinite(intensity) ||
        !std::isfinite(ring)) {
      ++result.dropped_nonfinite;
      continue;
    }
    cloud.points.push_back(Point3{x, y, z});
    cloud.intensities->push_back(intensity);
    cloud.rings->push_back(ring);
    if (have_labels) cloud.labels->push_back(raw_labels[r]);
  }
  return result;
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  cloud.validate();
  std::vector<std::uint8_t> buf;
  buf.reserve(cloud.points.size() * kRecordBytes);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point3& p = cloud.points[i];
    append_f32(buf, static_cast<float>(p.x));
    append_f32(buf, static_cast<float>(p.y));
    append_f32(buf, static_cast<float>(p.z));
    append_f32(buf, cloud.intensities ? (*cloud.intensities)[i] : 0.0f);
    append_f32(buf, cloud.rings ? (*cloud.rings)[i] : 0.0f);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write: " + path.string());
  if (cloud.labels) {
    std::ofstream lout(label_path_for(path), std::ios::binary | std::ios::trunc);
    if (!lout) throw IoError("cannot open for writing: " + label_path_for(path).string());
    lout.write(reinterpret_cast<const char*>(cloud.labels->data()),
               static_cast<std::streamsize>(cloud.labels->size()));
    if (!lout) throw IoError("short write: " + label_path_for(path).string());
  }
}

namespace {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

FrameIndex sample_subset(const FrameIndex& index, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("fraction must lie in (0, 1]");
  }
  const std::size_t total = index.scenes.size();
  const std::size_t keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(total)));

  // Rank scenes by a seeded hash of their id: prefixes of this fixed ranking
  // are nested across fractions for the same seed.
  std::vector<std::pair<std::uint64_t, std::size_t>> ranked;
  ranked.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    ranked.emplace_back(splitmix64(seed ^ fnv1a64(index.scenes[i].scene_id)), i);
  }
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return index.scenes[a.second].scene_id < index.scenes[b.second].scene_id;
  });

  std::vector<bool> selected(total, false);
  for (std::size_t i = 0; i < keep && i < total; ++i) selected[ranked[i].second] = true;

  FrameIndex subset;
  for (std::size_t i = 0; i < total; ++i) {
    if (selected[i]) subset.scenes.push_back(index.scenes[i]);
  }
  return subset;
}

}  // namespace occkit
