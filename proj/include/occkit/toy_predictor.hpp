// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "occkit/loss.hpp"
#include "occkit/occupancy.hpp"

namespace occkit {

// Bird's-eye-view feature plane, (c,h,w) row-major.
struct BevFeature {
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<double> data;

  std::size_t index(std::uint32_t c, std::uint32_t h, std::uint32_t w) const {
    return (static_cast<std::size_t>(c) * height + h) * width + w;
  }
};

// Volumetric feature, (c,z,y,x) row-major.
struct VoxelFeature {
  std::uint32_t channels = 0;
  std::uint32_t depth = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<double> data;

  std::size_t index(std::uint32_t c, std::uint32_t z, std::uint32_t y, std::uint32_t x) const {
    return ((static_cast<std::size_t>(c) * depth + z) * height + y) * width + x;
  }
  std::size_t size() const { return data.size(); }
};

// Regroups channel c of a (C,H,W) plane to slot (c', z) = (c / d, c % d) of a
// (C/d, d, H, W) volume. Bijective; reshape_bev_inverse recovers the input
// bit-exact. Throws when C is not divisible by d.
VoxelFeature reshape_bev(const BevFeature& f, std::uint32_t d);
BevFeature reshape_bev_inverse(const VoxelFeature& v);

// One zero-padded 3-D convolution layer; odd kernel extents keep the spatial
// shape. Weights are (out_ch, in_ch, kz, ky, kx) row-major.
struct ConvLayer {
  std::uint32_t out_channels = 0;
  std::uint32_t in_channels = 0;
  std::uint32_t kz = 1, ky = 1, kx = 1;
  std::vector<double> weights;
  std::vector<double> bias;

  std::size_t weight_index(std::uint32_t oc, std::uint32_t ic, std::uint32_t z, std::uint32_t y,
                           std::uint32_t x) const {
    return (((static_cast<std::size_t>(oc) * in_channels + ic) * kz + z) * ky + y) * kx + x;
  }
};

// Rectifier between layers, sigmoid on the last; the last layer emits one
// channel per timestep.
struct DecoderParams {
  std::vector<ConvLayer> layers;

  std::size_t parameter_count() const;
  void validate(std::uint32_t in_channels, std::uint32_t timesteps) const;
};

// Forward activations kept for the backward pass: inputs[l] is what layer l
// consumed, logits is the final pre-sigmoid tensor.
struct DecoderTrace {
  std::vector<VoxelFeature> inputs;
  VoxelFeature logits;
};

// Probabilities for each voxel and timestep; `spec` supplies the grid
// geometry the prediction is expressed in (its dims must match the feature).
PredictionGrid decoder_forward(const VoxelFeature& v, const DecoderParams& params,
                               const GridSpec& spec, DecoderTrace* trace = nullptr);

struct DecoderGradients {
  DecoderParams params;  // same shape as the input params
  VoxelFeature input;    // d(loss)/d(feature)
};

// Exact reverse-mode gradients of decoder_forward. `upstream` is
// d(loss)/d(probability), (t,z,y,x) row-major. Recomputes the forward pass
// unless a trace from decoder_forward is supplied.
DecoderGradients decoder_backward(const VoxelFeature& v, const DecoderParams& params,
                                  const std::vector<double>& upstream,
                                  const DecoderTrace* trace = nullptr);

struct ToyConfig {
  std::uint32_t depth = 16;
  std::uint32_t height = 32;
  std::uint32_t width = 32;
  std::uint32_t timesteps = 1;
  std::uint32_t feature_slots = 4;  // feature channels per height slice; C = feature_slots * depth
  std::uint32_t hidden_channels = 8;
  std::uint32_t layers = 2;
  std::uint32_t kernel = 3;
  double lr = 1.0;
  std::uint32_t iters = 500;
  std::uint64_t seed = 1;
  FocalLossParams loss;
};

struct ToyScene {
  OccupancyGrid4D target;
  BevFeature feature;
};

// Box-and-ground-plane world rasterized from seeded parameters. The feature
// plane is a seeded random per-channel encoding of the target volume plus
// noise, standing in for a trained BEV encoder.
ToyScene make_toy_scene(const ToyConfig& cfg);

struct TrainResult {
  DecoderParams params;
  std::vector<double> loss_history;  // length iters + 1, entry 0 is the initial loss
  PredictionGrid prediction;         // final forward pass
};

// Plain gradient descent on the focal loss, seeded deterministic init.
// Throws with the iteration index if the loss turns non-finite.
TrainResult train_toy(const ToyScene& scene, const ToyConfig& cfg);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // entries where both sides vanish
};

// Central-difference check of the end-to-end parameter gradient
// (loss of decoder of reshape). Diagnostic: never asserts, just reports.
GradCheckResult fd_gradcheck(const ToyConfig& cfg, double eps);

}  // namespace occkit
