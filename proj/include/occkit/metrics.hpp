// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "occkit/occupancy.hpp"

namespace occkit {

// counts[gt][pred] for gt in [0,k) and pred in [0,k]; the extra column k
// holds "predicted empty" (class 255 at a voxel whose ground truth is
// labeled), so missed voxels still hurt recall. Voxels with ground truth 255
// are only tallied in `ignored`.
struct ConfusionMatrix {
  std::uint32_t k = 0;
  std::vector<std::int64_t> counts;  // k rows, k+1 columns, row-major
  std::int64_t ignored = 0;

  std::int64_t at(std::uint32_t gt, std::uint32_t pred) const {
    return counts[static_cast<std::size_t>(gt) * (k + 1) + pred];
  }
  std::int64_t total() const;
};

// TP / (TP + FP + FN); 1.0 when both grids are entirely empty.
double binary_iou(const OccupancyGrid& pred, const OccupancyGrid& gt);

ConfusionMatrix confusion(const SemanticGrid& pred, const SemanticGrid& gt, std::uint32_t k);

struct ClassIou {
  bool present = false;  // false when the class appears in neither grid
  double iou = 0.0;
};

std::vector<ClassIou> per_class_iou(const ConfusionMatrix& cm);

// Arithmetic mean over present classes; throws when every class is absent.
double miou(const std::vector<ClassIou>& per_class);

std::vector<double> temporal_iou(const OccupancyGrid4D& pred, const OccupancyGrid4D& gt);

// The 17 semantic classes of the nuScenes-based occupancy prediction
// challenge, in the conventional reporting order.
inline constexpr std::array<const char*, 17> kOccupancyChallengeClassNames = {
    "others",     "barrier",    "bicycle",      "bus",     "car",   "construction_vehicle",
    "motorcycle", "pedestrian", "traffic_cone", "trailer", "truck", "driveable_surface",
    "other_flat", "sidewalk",   "terrain",      "manmade", "vegetation"};

}  // namespace occkit
