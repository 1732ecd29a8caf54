// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "occkit/dataset.hpp"
#include "occkit/occupancy.hpp"

namespace occkit {

struct FusionConfig {
  std::uint32_t keyframes_before = 0;
  std::uint32_t keyframes_after = 0;
  // Also pull in the non-keyframes strictly between the earliest and latest
  // selected keyframe.
  bool include_sweeps = false;
  bool dynamic_aware = false;
  // Drop fused points farther than this from the reference ego origin.
  std::optional<double> max_range;
  // Inflation applied to the half extents of the point-in-box test.
  double box_margin = 0.0;
};

struct FrameSet {
  FrameRecord reference;
  std::vector<FrameRecord> members;  // sorted by timestamp, contains reference
};

// Reference keyframe, up to keyframes_before/after neighbours in the same
// scene (truncated at scene boundaries), plus intermediate sweeps when
// configured. Throws if the id is unknown or not a keyframe.
FrameSet select_frames(const FrameIndex& index, const std::string& reference_id,
                       const FusionConfig& cfg);

using CloudMap = std::unordered_map<std::string, PointCloud>;

// Maps every member cloud into the reference ego frame through
// inv(ego_to_global_ref) * ego_to_global_k * lidar_to_ego_k and concatenates
// them, members in timestamp order, points in file order. Intensity, ring
// and label columns are carried through; a column is emitted when any member
// has it, with gaps padded (0 intensity, 0 ring, 255 label).
PointCloud fuse_static(const FrameSet& frames, const CloudMap& clouds, const FusionConfig& cfg);

// As fuse_static, but points inside an annotated box ride the box instead of
// the ego chain: p_ref = boxpose_ref(track) * inv(boxpose_k(track)) * p_ego.
// Points of tracks absent at the reference frame are dropped; a point inside
// several boxes goes with the box whose center is nearest.
PointCloud fuse_dynamic_aware(const FrameSet& frames, const CloudMap& clouds,
                              const FusionConfig& cfg);

using CloudProvider = std::function<PointCloud(const FrameRecord&)>;

struct Labels4D {
  OccupancyGrid4D occupancy;
  std::optional<std::vector<SemanticGrid>> semantics;
};

// Timestep i is the voxelization, in the i-th keyframe's own ego frame, of
// the fusion centered on that keyframe; timestep 0 is the reference. Needs
// the reference and the m-1 keyframes after it to exist in the scene.
// with_semantics additionally majority-votes per-voxel classes (clouds must
// carry labels).
Labels4D build_4d_labels(const FrameIndex& index, const std::string& reference_id, std::uint32_t m,
                         const FusionConfig& cfg, const GridSpec& spec, const CloudProvider& clouds,
                         bool with_semantics = false);

}  // namespace occkit
