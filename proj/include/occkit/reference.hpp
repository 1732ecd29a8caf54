// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "occkit/loss.hpp"
#include "occkit/metrics.hpp"
#include "occkit/occupancy.hpp"
#include "occkit/toy_predictor.hpp"

// Serial reference implementations of the parallel kernels: straight loops,
// no bit tricks, no scheduling. Kept for the test suites and the benchmark;
// the production library never calls them.
namespace occkit::ref {

OccupancyGrid voxelize(const PointCloud& cloud, const GridSpec& spec);

double focal_loss(const PredictionGrid& pred, const OccupancyGrid4D& target,
                  const FocalLossParams& params);

std::vector<double> focal_loss_grad(const PredictionGrid& pred, const OccupancyGrid4D& target,
                                    const FocalLossParams& params);

double binary_iou(const OccupancyGrid& pred, const OccupancyGrid& gt);

ConfusionMatrix confusion(const SemanticGrid& pred, const SemanticGrid& gt, std::uint32_t k);

PredictionGrid decoder_forward(const VoxelFeature& v, const DecoderParams& params,
                               const GridSpec& spec);

}  // namespace occkit::ref
