// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#include "occkit/loss.hpp"

#include <algorithm>
#include <cmath>

#include "occkit/errors.hpp"
#include "occkit/parallel.hpp"

namespace occkit {

FocalMode focal_mode_from_string(const std::string& name) {
  if (name == "standard") return FocalMode::standard;
  if (name == "literal" || name == "paper_literal") return FocalMode::literal;
  throw ValidationError("unknown focal mode '" + name + "' (expected standard|literal)");
}

const char* to_string(FocalMode mode) {
  return mode == FocalMode::standard ? "standard" : "literal";
}

void FocalLossParams::validate() const {
  if (!std::isfinite(alpha) || !std::isfinite(gamma) || !std::isfinite(clamp_eps)) {
    throw ValidationError("focal-loss parameters must be finite");
  }
  if (mode == FocalMode::standard && !(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("standard mode requires alpha in (0,1)");
  }
  if (!(gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) throw ValidationError("clamp_eps must lie in (0, 0.5)");
}

void PredictionGrid::validate() const {
  spec.validate();
  if (timesteps == 0) throw ValidationError("prediction grid needs at least one timestep");
  if (probs.size() != static_cast<std::size_t>(timesteps) * spec.voxel_count()) {
    throw ValidationError("prediction tensor size does not match timesteps * voxel count");
  }
  for (const double p : probs) {
    if (!std::isfinite(p)) throw ValidationError("prediction tensor has non-finite values");
  }
}

namespace {

void check_shapes(const PredictionGrid& pred, const OccupancyGrid4D& target,
                  const FocalLossParams& params) {
  params.validate();
  pred.validate();
  if (pred.spec != target.spec || pred.timesteps != target.frames.size()) {
    throw ValidationError("prediction and target shapes differ");
  }
}

}  // namespace

double focal_loss(const PredictionGrid& pred, const OccupancyGrid4D& target,
                  const FocalLossParams& params) {
  check_shapes(pred, target, params);
  const std::size_t n = pred.spec.voxel_count();
  const std::size_t total = pred.probs.size();
  const double lo = params.clamp_eps, hi = 1.0 - params.clamp_eps;
  const double alpha = params.alpha, gamma = params.gamma;
  const double* probs = pred.probs.data();
  const OccupancyGrid* frames = target.frames.data();

  const double sum = deterministic_sum(total, [&](std::size_t i) {
    const double p = std::clamp(probs[i], lo, hi);
    const bool occupied = frames[i / n].test(i % n);
    const double pt = occupied ? p : 1.0 - p;
    const double at = occupied ? alpha : 1.0 - alpha;
    return -at * std::pow(1.0 - pt, gamma) * std::log(pt);
  });
  return sum / static_cast<double>(total);
}

std::vector<double> focal_loss_grad(const PredictionGrid& pred, const OccupancyGrid4D& target,
                                    const FocalLossParams& params) {
  check_shapes(pred, target, params);
  const std::size_t n = pred.spec.voxel_count();
  const double lo = params.clamp_eps, hi = 1.0 - params.clamp_eps;
  const double alpha = params.alpha, gamma = params.gamma;
  const double scale = 1.0 / static_cast<double>(pred.probs.size());
  const double* probs = pred.probs.data();
  const OccupancyGrid* frames = target.frames.data();

  std::vector<double> grad(pred.probs.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(grad.size()); ++i) {
    const double raw = probs[i];
    if (raw < lo || raw > hi) continue;  // clamp active: flat region
    const double p = raw;
    const bool occupied = frames[static_cast<std::size_t>(i) / n].test(static_cast<std::size_t>(i) % n);
    double g;
    if (occupied) {
      const double q = 1.0 - p;
      const double hard = gamma == 0.0 ? 0.0 : gamma * std::pow(q, gamma - 1.0) * std::log(p);
      g = -alpha * scale * (std::pow(q, gamma) / p - hard);
    } else {
      const double hard = gamma == 0.0 ? 0.0 : gamma * std::pow(p, gamma - 1.0) * std::log(1.0 - p);
      g = (1.0 - alpha) * scale * (std::pow(p, gamma) / (1.0 - p) - hard);
    }
    grad[static_cast<std::size_t>(i)] = g;
  }
  return grad;
}

}  // namespace occkit
