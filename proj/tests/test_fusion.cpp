// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "occkit/errors.hpp"
#include "occkit/fusion.hpp"
#include "occkit/rng.hpp"
#include "oracles.hpp"

using namespace occkit;

namespace {

FrameRecord frame(const std::string& id, std::int64_t ts, bool keyframe,
                  const PoseSE3& ego_to_global = PoseSE3{},
                  const PoseSE3& lidar_to_ego = PoseSE3{}) {
  FrameRecord f;
  f.frame_id = id;
  f.timestamp_us = ts;
  f.is_keyframe = keyframe;
  f.cloud_path = id + ".bin";
  f.ego_to_global = ego_to_global;
  f.lidar_to_ego = lidar_to_ego;
  return f;
}

FrameIndex single_scene(std::vector<FrameRecord> frames) {
  FrameIndex index;
  Scene scene;
  scene.scene_id = "s";
  for (FrameRecord& f : frames) {
    f.scene_id = "s";
    scene.frames.push_back(std::move(f));
  }
  index.scenes.push_back(std::move(scene));
  return index;
}

// K0 w1 K2 w3 K4 w5 K6: keyframes at even timestamps, sweeps between.
FrameIndex keyframe_ladder() {
  return single_scene({frame("K0", 0, true), frame("w1", 1, false), frame("K2", 2, true),
                       frame("w3", 3, false), frame("K4", 4, true), frame("w5", 5, false),
                       frame("K6", 6, true)});
}

std::vector<std::string> member_ids(const FrameSet& set) {
  std::vector<std::string> ids;
  for (const FrameRecord& f : set.members) ids.push_back(f.frame_id);
  return ids;
}

PointCloud cloud_of(std::vector<Point3> pts) {
  PointCloud c;
  c.points = std::move(pts);
  return c;
}

}  // namespace

TEST_CASE("select_frames") {
  const FrameIndex index = keyframe_ladder();

  SUBCASE("reference only") {
    FusionConfig cfg;
    const FrameSet set = select_frames(index, "K2", cfg);
    CHECK(member_ids(set) == std::vector<std::string>{"K2"});
    CHECK(set.reference.frame_id == "K2");
  }
  SUBCASE("one keyframe each side plus sweeps") {
    FusionConfig cfg;
    cfg.keyframes_before = 1;
    cfg.keyframes_after = 1;
    cfg.include_sweeps = true;
    const FrameSet set = select_frames(index, "K2", cfg);
    CHECK(member_ids(set) == std::vector<std::string>{"K0", "w1", "K2", "w3", "K4"});
  }
  SUBCASE("sweeps outside the selected keyframe span stay out") {
    FusionConfig cfg;
    cfg.keyframes_after = 1;
    cfg.include_sweeps = true;
    const FrameSet set = select_frames(index, "K4", cfg);
    CHECK(member_ids(set) == std::vector<std::string>{"K4", "w5", "K6"});
  }
  SUBCASE("truncation at the scene start") {
    FusionConfig cfg;
    cfg.keyframes_before = 2;
    const FrameSet set = select_frames(index, "K0", cfg);
    CHECK(member_ids(set) == std::vector<std::string>{"K0"});
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(select_frames(index, "nope", FusionConfig{}), ValidationError);
    CHECK_THROWS_AS(select_frames(index, "w1", FusionConfig{}), ValidationError);
  }
}

TEST_CASE("fuse_static: identity poses concatenate") {
  const FrameIndex index =
      single_scene({frame("K0", 0, true), frame("K1", 1, true)});
  FusionConfig cfg;
  cfg.keyframes_after = 1;
  const FrameSet set = select_frames(index, "K0", cfg);
  CloudMap clouds;
  clouds.emplace("K0", cloud_of({{0, 0, 0}, {1, 1, 1}, {2, 2, 2}}));
  clouds.emplace("K1", cloud_of({{3, 3, 3}, {4, 4, 4}, {5, 5, 5}, {6, 6, 6}}));
  const PointCloud fused = fuse_static(set, clouds, cfg);
  REQUIRE(fused.size() == 7);
  CHECK(fused.points[0].x == 0.0);
  CHECK(fused.points[3].x == 3.0);  // frames in timestamp order, points in file order
  CHECK(fused.points[6].x == 6.0);
  CHECK(fused.source_frame == "K0");
}

TEST_CASE("fuse_static: single frame equals the matrix-oracle chain") {
  Rng rng(500);
  for (int rep = 0; rep < 20; ++rep) {
    const PoseSE3 ref_pose = oracle::random_pose(rng);
    const PoseSE3 member_pose = oracle::random_pose(rng);
    const PoseSE3 lidar = oracle::random_pose(rng, 0.5);
    const FrameIndex index = single_scene(
        {frame("R", 0, true, ref_pose), frame("M", 1, true, member_pose, lidar)});
    FusionConfig cfg;
    cfg.keyframes_after = 1;
    const FrameSet set = select_frames(index, "R", cfg);
    CloudMap clouds;
    clouds.emplace("R", cloud_of({}));
    const std::vector<Point3> pts{{1, 2, 3}, {-4, 0, 2}, {0.5, -0.25, 8}};
    clouds.emplace("M", cloud_of(pts));

    const PointCloud fused = fuse_static(set, clouds, cfg);
    REQUIRE(fused.size() == pts.size());

    const oracle::Mat4 chain =
        oracle::multiply(oracle::from_pose(invert(ref_pose)),
                         oracle::multiply(oracle::from_pose(member_pose), oracle::from_pose(lidar)));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Point3 expect = oracle::apply(chain, pts[i]);
      CHECK(std::abs(fused.points[i].x - expect.x) < 1e-9);
      CHECK(std::abs(fused.points[i].y - expect.y) < 1e-9);
      CHECK(std::abs(fused.points[i].z - expect.z) < 1e-9);
    }
  }
}

TEST_CASE("fuse_static: pure translation places the origin point") {
  const FrameIndex index = single_scene(
      {frame("R", 0, true), frame("M", 1, true, PoseSE3::from_translation(1, 0, 0))});
  FusionConfig cfg;
  cfg.keyframes_after = 1;
  const FrameSet set = select_frames(index, "R", cfg);
  CloudMap clouds;
  clouds.emplace("R", cloud_of({}));
  clouds.emplace("M", cloud_of({{0, 0, 0}}));
  const PointCloud fused = fuse_static(set, clouds, cfg);
  REQUIRE(fused.size() == 1);
  CHECK(fused.points[0].x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fused.points[0].y == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fuse_static: max_range drops far points") {
  const FrameIndex index = single_scene({frame("R", 0, true)});
  FusionConfig cfg;
  cfg.max_range = 5.0;
  const FrameSet set = select_frames(index, "R", cfg);
  CloudMap clouds;
  clouds.emplace("R", cloud_of({{1, 0, 0}, {10, 0, 0}, {3, 4, 0}, {3, 4, 0.1}}));
  const PointCloud fused = fuse_static(set, clouds, cfg);
  // the 3-4-5 triangle sits exactly on the range and stays; the two farther
  // points go
  CHECK(fused.size() == 2);
}

TEST_CASE("fuse_static: missing member cloud") {
  const FrameIndex index = single_scene({frame("R", 0, true), frame("M", 1, true)});
  FusionConfig cfg;
  cfg.keyframes_after = 1;
  const FrameSet set = select_frames(index, "R", cfg);
  CloudMap clouds;
  clouds.emplace("R", cloud_of({{0, 0, 0}}));
  CHECK_THROWS_AS(fuse_static(set, clouds, cfg), ValidationError);
}

TEST_CASE("fuse_static: optional columns are carried and padded") {
  const FrameIndex index = single_scene({frame("R", 0, true), frame("M", 1, true)});
  FusionConfig cfg;
  cfg.keyframes_after = 1;
  const FrameSet set = select_frames(index, "R", cfg);
  CloudMap clouds;
  PointCloud labeled = cloud_of({{0, 0, 0}});
  labeled.labels.emplace(std::vector<std::uint8_t>{7});
  labeled.intensities.emplace(std::vector<float>{0.5f});
  clouds.emplace("R", std::move(labeled));
  clouds.emplace("M", cloud_of({{1, 1, 1}}));
  const PointCloud fused = fuse_static(set, clouds, cfg);
  REQUIRE(fused.labels.has_value());
  CHECK((*fused.labels)[0] == 7);
  CHECK((*fused.labels)[1] == kUnlabeled);
  REQUIRE(fused.intensities.has_value());
  CHECK((*fused.intensities)[0] == 0.5f);
  CHECK((*fused.intensities)[1] == 0.0f);
}

namespace {

BoxAnnotation box(const std::string& track, const Point3& center, double yaw,
                  double w = 2.0, double l = 2.0, double h = 2.0) {
  BoxAnnotation b;
  b.track_id = track;
  b.center = center;
  b.width = w;
  b.length = l;
  b.height = h;
  b.yaw = yaw;
  b.class_id = 1;
  return b;
}

}  // namespace

TEST_CASE("fuse_dynamic_aware: no boxes is bit-identical to static") {
  Rng rng(600);
  const PoseSE3 ref_pose = oracle::random_pose(rng);
  const PoseSE3 member_pose = oracle::random_pose(rng);
  const PoseSE3 lidar = oracle::random_pose(rng, 0.3);
  const FrameIndex index = single_scene(
      {frame("R", 0, true, ref_pose, lidar), frame("M", 1, true, member_pose, lidar)});
  FusionConfig cfg;
  cfg.keyframes_after = 1;
  const FrameSet set = select_frames(index, "R", cfg);
  CloudMap clouds;
  std::vector<Point3> a, b;
  for (int i = 0; i < 200; ++i) {
    a.push_back(Point3{rng.uniform_in(-10, 10), rng.uniform_in(-10, 10), rng.uniform_in(-2, 2)});
    b.push_back(Point3{rng.uniform_in(-10, 10), rng.uniform_in(-10, 10), rng.uniform_in(-2, 2)});
  }
  clouds.emplace("R", cloud_of(a));
  clouds.emplace("M", cloud_of(b));
  const PointCloud fused_static = fuse_static(set, clouds, cfg);
  const PointCloud fused_dynamic = fuse_dynamic_aware(set, clouds, cfg);
  REQUIRE(fused_static.size() == fused_dynamic.size());
  for (std::size_t i = 0; i < fused_static.size(); ++i) {
    CHECK(fused_static.points[i] == fused_dynamic.points[i]);
  }
}

TEST_CASE("fuse_dynamic_aware: translated box carries its points") {
  // Static ego everywhere; the track sits at the origin in M and at (2,0,0)
  // in the reference.
  FrameRecord r = frame("R", 0, true);
  r.boxes = {box("car", Point3{2, 0, 0}, 0.0)};
  FrameRecord m = frame("M", 1, true);
  m.boxes = {box("car", Point3{0, 0, 0}, 0.0)};
  const FrameIndex index = single_scene({r, m});
  FusionConfig cfg;
  cfg.keyframes_after = 1;
  cfg.dynamic_aware = true;
  const FrameSet set = select_frames(index, "R", cfg);
  CloudMap clouds;
  clouds.emplace("R", cloud_of({}));
  clouds.emplace("M", cloud_of({{0, 0, 0}, {0.5, 0.25, 0}, {5, 5, 5}}));
  const PointCloud fused = fuse_dynamic_aware(set, clouds, cfg);
  REQUIRE(fused.size() == 3);
  CHECK(std::abs(fused.points[0].x - 2.0) < 1e-12);  // box center lands on the ref box center
  CHECK(std::abs(fused.points[1].x - 2.5) < 1e-12);
  CHECK(std::abs(fused.points[1].y - 0.25) < 1e-12);
  CHECK(fused.points[2].x == 5.0);  // outside the box: static path
}

TEST_CASE("fuse_dynamic_aware: yaw change rotates in-box points") {
  FrameRecord r = frame("R", 0, true);
  r.boxes = {box("car", Point3{2, 0, 0}, std::numbers::pi / 2.0)};
  FrameRecord m = frame("M", 1, true);
  m.boxes = {box("car", Point3{0, 0, 0}, 0.0)};
  const FrameIndex index = single_scene({r, m});
  FusionConfig cfg;
  cfg.keyframes_after = 1;
  cfg.dynamic_aware = true;
  const FrameSet set = select_frames(index, "R", cfg);
  CloudMap clouds;
  clouds.emplace("R", cloud_of({}));
  clouds.emplace("M", cloud_of({{0.5, 0, 0}}));
  const PointCloud fused = fuse_dynamic_aware(set, clouds, cfg);
  REQUIRE(fused.size() == 1);
  CHECK(std::abs(fused.points[0].x - 2.0) < 1e-9);
  CHECK(std::abs(fused.points[0].y - 0.5) < 1e-9);
}

TEST_CASE("fuse_dynamic_aware: tracks absent at the reference are dropped") {
  FrameRecord r = frame("R", 0, true);
  r.boxes = std::vector<BoxAnnotation>{};  // annotated, but empty
  FrameRecord m = frame("M", 1, true);
  m.boxes = {box("gone", Point3{0, 0, 0}, 0.0)};
  const FrameIndex index = single_scene({r, m});
  FusionConfig cfg;
  cfg.keyframes_after = 1;
  cfg.dynamic_aware = true;
  const FrameSet set = select_frames(index, "R", cfg);
  CloudMap clouds;
  clouds.emplace("R", cloud_of({{9, 9, 9}}));
  const std::vector<Point3> pts{{0, 0, 0}, {0.5, 0.5, 0.5}, {4, 4, 4}, {-0.9, 0, 0}};
  clouds.emplace("M", cloud_of(pts));

  // Enumeration oracle: count the M points inside the vanished box.
  std::size_t inside = 0;
  for (const Point3& p : pts) {
    if (std::abs(p.x) <= 1.0 && std::abs(p.y) <= 1.0 && std::abs(p.z) <= 1.0) ++inside;
  }
  CHECK(inside == 3);

  const PointCloud fused = fuse_dynamic_aware(set, clouds, cfg);
  const PointCloud as_static = fuse_static(set, clouds, cfg);
  CHECK(fused.size() == as_static.size() - inside);
}

TEST_CASE("fuse_dynamic_aware: overlapping boxes go to the nearest center") {
  FrameRecord r = frame("R", 0, true);
  r.boxes = {box("a", Point3{5, 0, 0}, 0.0), box("b", Point3{0, 5, 0}, 0.0)};
  FrameRecord m = frame("M", 1, true);
  // Both boxes overlap around the origin in M.
  m.boxes = {box("a", Point3{-0.5, 0, 0}, 0.0, 4, 4, 4), box("b", Point3{0.5, 0, 0}, 0.0, 4, 4, 4)};
  const FrameIndex index = single_scene({r, m});
  FusionConfig cfg;
  cfg.keyframes_after = 1;
  cfg.dynamic_aware = true;
  const FrameSet set = select_frames(index, "R", cfg);
  CloudMap clouds;
  clouds.emplace("R", cloud_of({}));
  clouds.emplace("M", cloud_of({{0.4, 0, 0}}));  // nearer to b's center
  const PointCloud fused = fuse_dynamic_aware(set, clouds, cfg);
  REQUIRE(fused.size() == 1);
  // Warped by b: ref_b * inv(m_b) applied to (0.4,0,0) = (0.5-0.1, 5, 0)
  CHECK(std::abs(fused.points[0].x - (-0.1)) < 1e-12);
  CHECK(std::abs(fused.points[0].y - 5.0) < 1e-12);
}

TEST_CASE("fused-then-voxelized equals union-of-transformed-then-voxelized") {
  Rng rng(700);
  const PoseSE3 ref_pose = oracle::random_pose(rng, 2.0);
  const PoseSE3 pose_m1 = oracle::random_pose(rng, 2.0);
  const PoseSE3 pose_m2 = oracle::random_pose(rng, 2.0);
  const FrameIndex index =
      single_scene({frame("R", 0, true, ref_pose), frame("M1", 1, true, pose_m1),
                    frame("M2", 2, true, pose_m2)});
  FusionConfig cfg;
  cfg.keyframes_after = 2;
  const FrameSet set = select_frames(index, "R", cfg);

  CloudMap clouds;
  for (const char* id : {"R", "M1", "M2"}) {
    std::vector<Point3> pts;
    for (int i = 0; i < 400; ++i) {
      pts.push_back(Point3{rng.uniform_in(-8, 8), rng.uniform_in(-8, 8), rng.uniform_in(-2, 2)});
    }
    clouds.emplace(id, cloud_of(std::move(pts)));
  }

  GridSpec spec;
  spec.origin = Point3{-12, -12, -6};
  spec.voxel_z = spec.voxel_y = spec.voxel_x = 0.5;
  spec.nz = 24;
  spec.ny = 48;
  spec.nx = 48;

  const OccupancyGrid fused_grid = voxelize(fuse_static(set, clouds, cfg), spec);

  PointCloud unioned;
  for (const FrameRecord& member : set.members) {
    const PoseSE3 chain = compose(invert(ref_pose),
                                  compose(member.ego_to_global, member.lidar_to_ego));
    const std::vector<Point3> mapped = transform_points(chain, clouds.at(member.frame_id).points);
    unioned.points.insert(unioned.points.end(), mapped.begin(), mapped.end());
  }
  const OccupancyGrid union_grid = voxelize(unioned, spec);
  CHECK(fused_grid == union_grid);
}

TEST_CASE("more keyframes never shrink the fused cloud or the occupied set") {
  Rng rng(800);
  std::vector<FrameRecord> frames;
  for (int i = 0; i < 11; ++i) {
    frames.push_back(frame("f" + std::to_string(i), i, i % 2 == 0,
                           PoseSE3::from_translation(0.3 * i, 0, 0)));
  }
  const FrameIndex index = single_scene(std::move(frames));
  CloudMap clouds;
  for (int i = 0; i < 11; ++i) {
    std::vector<Point3> pts;
    for (int k = 0; k < 300; ++k) {
      pts.push_back(Point3{rng.uniform_in(-6, 6), rng.uniform_in(-6, 6), rng.uniform_in(-2, 2)});
    }
    clouds.emplace("f" + std::to_string(i), cloud_of(std::move(pts)));
  }
  GridSpec spec;
  spec.origin = Point3{-8, -8, -3};
  spec.voxel_z = spec.voxel_y = spec.voxel_x = 0.5;
  spec.nz = 12;
  spec.ny = 32;
  spec.nx = 32;

  std::size_t prev_points = 0, prev_occupied = 0;
  for (const std::uint32_t surround : {0u, 1u, 2u}) {
    FusionConfig cfg;
    cfg.keyframes_before = surround;
    cfg.keyframes_after = surround;
    cfg.include_sweeps = surround > 0;
    const FrameSet set = select_frames(index, "f4", cfg);
    const PointCloud fused = fuse_static(set, clouds, cfg);
    const std::size_t occupied = voxelize(fused, spec).popcount();
    CHECK(fused.size() >= prev_points);
    CHECK(occupied >= prev_occupied);
    prev_points = fused.size();
    prev_occupied = occupied;
  }
}

TEST_CASE("build_4d_labels") {
  GridSpec spec;
  spec.origin = Point3{-4, -4, -4};
  spec.voxel_z = spec.voxel_y = spec.voxel_x = 1.0;
  spec.nz = spec.ny = spec.nx = 8;

  SUBCASE("m=1 reduces to voxelize(fuse(reference))") {
    const FrameIndex index = single_scene({frame("K0", 0, true), frame("K1", 1, true)});
    CloudMap clouds;
    clouds.emplace("K0", cloud_of({{0.5, 0.5, 0.5}, {-2, 1, 0}}));
    clouds.emplace("K1", cloud_of({{3, 3, 3}}));
    FusionConfig cfg;
    const CloudProvider provider = [&clouds](const FrameRecord& f) { return clouds.at(f.frame_id); };
    const Labels4D labels = build_4d_labels(index, "K0", 1, cfg, spec, provider);
    REQUIRE(labels.occupancy.frames.size() == 1);
    const FrameSet set = select_frames(index, "K0", cfg);
    CHECK(labels.occupancy.frames[0] == voxelize(fuse_static(set, clouds, cfg), spec));
  }
  SUBCASE("m=2 with identity poses and identical clouds gives identical grids") {
    const FrameIndex index = single_scene({frame("K0", 0, true), frame("K1", 1, true)});
    const std::vector<Point3> pts{{0.5, 0.5, 0.5}, {1.5, -1.5, 2.5}};
    CloudMap clouds;
    clouds.emplace("K0", cloud_of(pts));
    clouds.emplace("K1", cloud_of(pts));
    const CloudProvider provider = [&clouds](const FrameRecord& f) { return clouds.at(f.frame_id); };
    const Labels4D labels = build_4d_labels(index, "K0", 2, FusionConfig{}, spec, provider);
    REQUIRE(labels.occupancy.frames.size() == 2);
    CHECK(labels.occupancy.frames[0] == labels.occupancy.frames[1]);
  }
  SUBCASE("m=2 with a voxel-multiple ego shift slides the grid") {
    // Second keyframe's ego sits 2 m further along x; the world is static, so
    // its label grid is the first one shifted by -2 cells in x.
    const FrameIndex index = single_scene(
        {frame("K0", 0, true), frame("K1", 1, true, PoseSE3::from_translation(2, 0, 0))});
    const std::vector<Point3> world{{0.5, 0.5, 0.5}, {2.5, 1.5, -0.5}, {-1.5, -2.5, 1.5}};
    CloudMap clouds;
    clouds.emplace("K0", cloud_of(world));
    // K1's cloud holds the same world points expressed in K1's frame.
    clouds.emplace("K1", cloud_of(transform_points(invert(PoseSE3::from_translation(2, 0, 0)),
                                                   world)));
    const CloudProvider provider = [&clouds](const FrameRecord& f) { return clouds.at(f.frame_id); };
    const Labels4D labels = build_4d_labels(index, "K0", 2, FusionConfig{}, spec, provider);
    REQUIRE(labels.occupancy.frames.size() == 2);
    for (std::uint32_t z = 0; z < spec.nz; ++z) {
      for (std::uint32_t y = 0; y < spec.ny; ++y) {
        for (std::uint32_t x = 0; x < spec.nx; ++x) {
          const bool in_first = labels.occupancy.frames[0].test(z, y, x);
          if (x >= 2) {
            CHECK(labels.occupancy.frames[1].test(z, y, x - 2) == in_first);
          }
        }
      }
    }
  }
  SUBCASE("not enough keyframes") {
    const FrameIndex index = single_scene({frame("K0", 0, true), frame("w1", 1, false)});
    CloudMap clouds;
    clouds.emplace("K0", cloud_of({}));
    const CloudProvider provider = [&clouds](const FrameRecord& f) { return clouds.at(f.frame_id); };
    CHECK_THROWS_AS(build_4d_labels(index, "K0", 2, FusionConfig{}, spec, provider),
                    ValidationError);
  }
  SUBCASE("semantic voting rides along") {
    const FrameIndex index = single_scene({frame("K0", 0, true)});
    PointCloud labeled = cloud_of({{0.5, 0.5, 0.5}, {0.6, 0.6, 0.6}});
    labeled.labels.emplace(std::vector<std::uint8_t>{3, 3});
    CloudMap clouds;
    clouds.emplace("K0", std::move(labeled));
    const CloudProvider provider = [&clouds](const FrameRecord& f) { return clouds.at(f.frame_id); };
    const Labels4D labels = build_4d_labels(index, "K0", 1, FusionConfig{}, spec, provider, true);
    REQUIRE(labels.semantics.has_value());
    const std::size_t lin = spec.linear(4, 4, 4);
    CHECK((*labels.semantics)[0].classes[lin] == 3);
  }
}
