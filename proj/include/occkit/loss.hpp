// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occkit/occupancy.hpp"

namespace occkit {

// `standard` constrains alpha to (0,1), the usual focal-loss setup.
// `literal` takes alpha/gamma exactly as given, so the implied negative-class
// weight 1-alpha may be negative; useful for auditing published constants.
enum class FocalMode { standard, literal };

FocalMode focal_mode_from_string(const std::string& name);
const char* to_string(FocalMode mode);

struct FocalLossParams {
  double alpha = 0.25;
  double gamma = 2.0;
  double clamp_eps = 1e-7;
  FocalMode mode = FocalMode::standard;

  void validate() const;
};

// Predicted per-voxel occupancy probabilities, (t,z,y,x) row-major.
// Values are clamped to [clamp_eps, 1-clamp_eps] before any logarithm.
struct PredictionGrid {
  GridSpec spec;
  std::uint32_t timesteps = 1;
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  void validate() const;
};

// Mean focal loss over all timesteps and voxels:
//   -(1/m)(1/n) sum_ij alpha_t (1 - P_t)^gamma ln(P_t)
// with P_t = p, alpha_t = alpha at occupied voxels and P_t = 1-p,
// alpha_t = 1-alpha at free ones. Accumulated in double with a fixed
// reduction tree, so the result is bit-identical for any thread count.
double focal_loss(const PredictionGrid& pred, const OccupancyGrid4D& target,
                  const FocalLossParams& params);

// d(loss)/d(p) per voxel, same layout as pred.probs. Exactly zero where the
// clamp is active (the loss is flat there).
std::vector<double> focal_loss_grad(const PredictionGrid& pred, const OccupancyGrid4D& target,
                                    const FocalLossParams& params);

}  // namespace occkit
