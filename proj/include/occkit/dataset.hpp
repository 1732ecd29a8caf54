// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "occkit/geometry.hpp"

namespace occkit {

struct BoxAnnotation {
  std::string track_id;
  Point3 center;  // this frame's ego coordinates
  double width = 0.0;   // extent across heading (box-local y)
  double length = 0.0;  // extent along heading (box-local x)
  double height = 0.0;  // extent along z
  double yaw = 0.0;     // radians about +Z, in [-pi, pi]
  int class_id = 0;
};

struct FrameRecord {
  std::string frame_id;
  std::int64_t timestamp_us = 0;
  bool is_keyframe = false;
  std::string cloud_path;  // relative to the index file's directory
  PoseSE3 ego_to_global;
  PoseSE3 lidar_to_ego;
  std::optional<std::vector<BoxAnnotation>> boxes;
  std::string scene_id;
};

// Column-of-records point set. Optional columns, when present, run parallel
// to `points`; label 255 means unlabeled.
struct PointCloud {
  std::vector<Point3> points;
  std::optional<std::vector<float>> intensities;
  std::optional<std::vector<float>> rings;
  std::optional<std::vector<std::uint8_t>> labels;
  std::string source_frame;

  std::size_t size() const { return points.size(); }
  // Throws ValidationError if an optional column's length disagrees.
  void validate() const;
};

struct Scene {
  std::string scene_id;
  std::vector<FrameRecord> frames;  // strictly increasing timestamps
};

struct FrameIndex {
  std::vector<Scene> scenes;  // frame ids unique across the whole index

  const FrameRecord* find_frame(const std::string& frame_id) const;
  const Scene* find_scene(const std::string& scene_id) const;
  std::size_t frame_count() const;
};

// Parses the JSON index document (see README for the schema), validates the
// per-scene invariants (strictly increasing timestamps, at least one
// keyframe, globally unique frame ids) and normalizes poses. Unknown keys
// are ignored. Errors name the offending scene/frame.
FrameIndex load_index(const std::filesystem::path& path);

void write_index(const FrameIndex& index, const std::filesystem::path& path);

struct CloudLoadResult {
  PointCloud cloud;
  std::size_t dropped_nonfinite = 0;
};

// Reads consecutive little-endian records of five f32 (x, y, z, intensity,
// ring), no header. Records with a non-finite value are dropped and counted.
// If `<path minus extension>.labels` exists it is read as one u8 class id
// per record, in order, and dropped in lockstep with its point.
CloudLoadResult load_cloud(const std::filesystem::path& path);

// Inverse of load_cloud; missing intensity/ring columns are written as 0.
// A labels column, when present, goes to the sibling `.labels` file.
void write_cloud(const PointCloud& cloud, const std::filesystem::path& path);

// Path of the per-point label file next to a cloud file.
std::filesystem::path label_path_for(const std::filesystem::path& cloud_path);

// Picks ceil(fraction * #scenes) whole scenes, deterministically for a fixed
// (index, fraction, seed). Scenes are ranked by a seeded hash of their id,
// so the selection at a smaller fraction is a subset of the selection at a
// larger one under the same seed. Scene order of the input is preserved.
FrameIndex sample_subset(const FrameIndex& index, double fraction, std::uint64_t seed);

}  // namespace occkit
