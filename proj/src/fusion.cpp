// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#include "occkit/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "occkit/errors.hpp"

namespace occkit {

FrameSet select_frames(const FrameIndex& index, const std::string& reference_id,
                       const FusionConfig& cfg) {
  const FrameRecord* reference = index.find_frame(reference_id);
  if (reference == nullptr) throw ValidationError("unknown reference frame '" + reference_id + "'");
  if (!reference->is_keyframe) {
    throw ValidationError("reference frame '" + reference_id + "' is not a keyframe");
  }
  const Scene* scene = index.find_scene(reference->scene_id);

  std::vector<std::size_t> keyframes;
  std::size_t ref_pos = 0;
  for (std::size_t i = 0; i < scene->frames.size(); ++i) {
    if (scene->frames[i].is_keyframe) {
      if (scene->frames[i].frame_id == reference_id) ref_pos = keyframes.size();
      keyframes.push_back(i);
    }
  }

  const std::size_t first_kf = ref_pos >= cfg.keyframes_before ? ref_pos - cfg.keyframes_before : 0;
  const std::size_t last_kf = std::min(ref_pos + cfg.keyframes_after, keyframes.size() - 1);

  FrameSet set;
  set.reference = *reference;
  const std::size_t lo = keyframes[first_kf];
  const std::size_t hi = keyframes[last_kf];
  for (std::size_t i = lo; i <= hi; ++i) {
    const FrameRecord& frame = scene->frames[i];
    if (frame.is_keyframe || cfg.include_sweeps) set.members.push_back(frame);
  }
  return set;
}

namespace {

bool point_in_box(const Point3& p_ego, const BoxAnnotation& box, double margin) {
  const double dx = p_ego.x - box.center.x;
  const double dy = p_ego.y - box.center.y;
  const double dz = p_ego.z - box.center.z;
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const double lx = c * dx + s * dy;   // along heading
  const double ly = -s * dx + c * dy;  // across heading
  return std::abs(lx) <= box.length / 2.0 + margin && std::abs(ly) <= box.width / 2.0 + margin &&
         std::abs(dz) <= box.height / 2.0 + margin;
}

PoseSE3 box_pose(const BoxAnnotation& box) {
  return compose(PoseSE3::from_translation(box.center.x, box.center.y, box.center.z),
                 PoseSE3::rot_z(box.yaw));
}

struct ColumnPolicy {
  bool intensities = false;
  bool rings = false;
  bool labels = false;
};

ColumnPolicy column_policy(const FrameSet& frames, const CloudMap& clouds) {
  ColumnPolicy policy;
  for (const FrameRecord& member : frames.members) {
    auto it = clouds.find(member.frame_id);
    if (it == clouds.end()) {
      throw ValidationError("missing cloud for member frame '" + member.frame_id + "'");
    }
    it->second.validate();
    policy.intensities = policy.intensities || it->second.intensities.has_value();
    policy.rings = policy.rings || it->second.rings.has_value();
    policy.labels = policy.labels || it->second.labels.has_value();
  }
  return policy;
}

PointCloud make_output(const FrameSet& frames, const ColumnPolicy& policy) {
  PointCloud out;
  out.source_frame = frames.reference.frame_id;
  if (policy.intensities) out.intensities.emplace();
  if (policy.rings) out.rings.emplace();
  if (policy.labels) out.labels.emplace();
  return out;
}

void append_point(PointCloud& out, const ColumnPolicy& policy, const PointCloud& src,
                  std::size_t i, const Point3& mapped) {
  out.points.push_back(mapped);
  if (policy.intensities) {
    out.intensities->push_back(src.intensities ? (*src.intensities)[i] : 0.0f);
  }
  if (policy.rings) out.rings->push_back(src.rings ? (*src.rings)[i] : 0.0f);
  if (policy.labels) out.labels->push_back(src.labels ? (*src.labels)[i] : kUnlabeled);
}

bool within_range(const Point3& p, const std::optional<double>& max_range) {
  if (!max_range) return true;
  return p.x * p.x + p.y * p.y + p.z * p.z <= *max_range * *max_range;
}

}  // namespace

PointCloud fuse_static(const FrameSet& frames, const CloudMap& clouds, const FusionConfig& cfg) {
  const ColumnPolicy policy = column_policy(frames, clouds);
  PointCloud out = make_output(frames, policy);
  const PoseSE3 global_to_ref = invert(frames.reference.ego_to_global);
  for (const FrameRecord& member : frames.members) {
    const PointCloud& src = clouds.at(member.frame_id);
    const PoseSE3 chain =
        compose(global_to_ref, compose(member.ego_to_global, member.lidar_to_ego));
    std::vector<Point3> mapped = transform_points(chain, src.points);
    for (std::size_t i = 0; i < mapped.size(); ++i) {
      if (!within_range(mapped[i], cfg.max_range)) continue;
      append_point(out, policy, src, i, mapped[i]);
    }
  }
  return out;
}

PointCloud fuse_dynamic_aware(const FrameSet& frames, const CloudMap& clouds,
                              const FusionConfig& cfg) {
  const ColumnPolicy policy = column_policy(frames, clouds);
  PointCloud out = make_output(frames, policy);

  // Box poses at the reference frame, by track.
  std::unordered_map<std::string, PoseSE3> ref_tracks;
  if (frames.reference.boxes) {
    for (const BoxAnnotation& box : *frames.reference.boxes) {
      ref_tracks.emplace(box.track_id, box_pose(box));
    }
  }

  const PoseSE3 global_to_ref = invert(frames.reference.ego_to_global);
  for (const FrameRecord& member : frames.members) {
    const PointCloud& src = clouds.at(member.frame_id);
    // Same chain expression as fuse_static, so points outside every box land
    // on bit-identical coordinates.
    const PoseSE3 chain =
        compose(global_to_ref, compose(member.ego_to_global, member.lidar_to_ego));
    const std::vector<Point3> in_ref_static = transform_points(chain, src.points);
    const std::vector<Point3> in_ego = transform_points(member.lidar_to_ego, src.points);
    const std::vector<BoxAnnotation>* boxes =
        member.boxes.has_value() ? &*member.boxes : nullptr;

    // Per-track warp ref_boxpose * inv(member_boxpose), or drop when the
    // track is gone at the reference time.
    std::vector<std::optional<PoseSE3>> track_warp;
    if (boxes != nullptr) {
      track_warp.reserve(boxes->size());
      for (const BoxAnnotation& box : *boxes) {
        auto it = ref_tracks.find(box.track_id);
        if (it == ref_tracks.end()) {
          track_warp.push_back(std::nullopt);
        } else {
          track_warp.push_back(compose(it->second, invert(box_pose(box))));
        }
      }
    }

    enum : std::int32_t { kStatic = -1, kDrop = -2 };
    std::vector<std::int32_t> route(in_ego.size(), kStatic);
    if (boxes != nullptr && !boxes->empty()) {
#pragma omp parallel for schedule(static)
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(in_ego.size()); ++i) {
        const Point3& p = in_ego[static_cast<std::size_t>(i)];
        std::int32_t best = kStatic;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < boxes->size(); ++b) {
          const BoxAnnotation& box = (*boxes)[b];
          if (!point_in_box(p, box, cfg.box_margin)) continue;
          const double dx = p.x - box.center.x;
          const double dy = p.y - box.center.y;
          const double dz = p.z - box.center.z;
          const double dist = dx * dx + dy * dy + dz * dz;
          if (dist < best_dist) {
            best_dist = dist;
            best = static_cast<std::int32_t>(b);
          }
        }
        if (best >= 0 && !track_warp[static_cast<std::size_t>(best)]) best = kDrop;
        route[static_cast<std::size_t>(i)] = best;
      }
    }

    for (std::size_t i = 0; i < in_ego.size(); ++i) {
      if (route[i] == kDrop) continue;
      const Point3 mapped = route[i] == kStatic
                                ? in_ref_static[i]
                                : track_warp[static_cast<std::size_t>(route[i])]->apply(in_ego[i]);
      if (!within_range(mapped, cfg.max_range)) continue;
      append_point(out, policy, src, i, mapped);
    }
  }
  return out;
}

Labels4D build_4d_labels(const FrameIndex& index, const std::string& reference_id, std::uint32_t m,
                         const FusionConfig& cfg, const GridSpec& spec, const CloudProvider& clouds,
                         bool with_semantics) {
  if (m == 0) throw ValidationError("timestep count m must be >= 1");
  spec.validate();
  const FrameRecord* reference = index.find_frame(reference_id);
  if (reference == nullptr) throw ValidationError("unknown reference frame '" + reference_id + "'");
  if (!reference->is_keyframe) {
    throw ValidationError("reference frame '" + reference_id + "' is not a keyframe");
  }
  const Scene* scene = index.find_scene(reference->scene_id);

  std::vector<const FrameRecord*> anchors;
  bool past_reference = false;
  for (const FrameRecord& frame : scene->frames) {
    if (frame.frame_id == reference_id) past_reference = true;
    if (past_reference && frame.is_keyframe) anchors.push_back(&frame);
    if (anchors.size() == m) break;
  }
  if (anchors.size() < m) {
    throw ValidationError("scene '" + scene->scene_id + "' has only " +
                          std::to_string(anchors.size()) + " keyframes from '" + reference_id +
                          "' on, need " + std::to_string(m));
  }

  Labels4D labels;
  labels.occupancy.spec = spec;
  if (with_semantics) labels.semantics.emplace();
  for (const FrameRecord* anchor : anchors) {
    const FrameSet set = select_frames(index, anchor->frame_id, cfg);
    CloudMap member_clouds;
    for (const FrameRecord& member : set.members) {
      member_clouds.emplace(member.frame_id, clouds(member));
    }
    const PointCloud fused = cfg.dynamic_aware ? fuse_dynamic_aware(set, member_clouds, cfg)
                                               : fuse_static(set, member_clouds, cfg);
    labels.occupancy.frames.push_back(voxelize(fused, spec));
    if (with_semantics) labels.semantics->push_back(voxelize_semantic(fused, spec));
  }
  return labels;
}

}  // namespace occkit
