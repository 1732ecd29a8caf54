// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#include "occkit/reference.hpp"

#include <algorithm>
#include <cmath>

#include "occkit/dataset.hpp"
#include "occkit/errors.hpp"

namespace occkit::ref {

OccupancyGrid voxelize(const PointCloud& cloud, const GridSpec& spec) {
  spec.validate();
  OccupancyGrid grid(spec);
  for (const Point3& p : cloud.points) {
    const double cz = std::floor((p.z - spec.origin.z) / spec.voxel_z);
    const double cy = std::floor((p.y - spec.origin.y) / spec.voxel_y);
    const double cx = std::floor((p.x - spec.origin.x) / spec.voxel_x);
    if (!(cz >= 0.0 && cz < spec.nz && cy >= 0.0 && cy < spec.ny && cx >= 0.0 && cx < spec.nx)) {
      continue;
    }
    grid.set(static_cast<std::uint32_t>(cz), static_cast<std::uint32_t>(cy),
             static_cast<std::uint32_t>(cx));
  }
  return grid;
}

namespace {

double loss_term(double raw, bool occupied, const FocalLossParams& params) {
  const double p = std::clamp(raw, params.clamp_eps, 1.0 - params.clamp_eps);
  const double pt = occupied ? p : 1.0 - p;
  const double at = occupied ? params.alpha : 1.0 - params.alpha;
  return -at * std::pow(1.0 - pt, params.gamma) * std::log(pt);
}

}  // namespace

double focal_loss(const PredictionGrid& pred, const OccupancyGrid4D& target,
                  const FocalLossParams& params) {
  params.validate();
  pred.validate();
  if (pred.spec != target.spec || pred.timesteps != target.frames.size()) {
    throw ValidationError("prediction and target shapes differ");
  }
  const std::size_t n = pred.spec.voxel_count();
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.probs.size(); ++i) {
    sum += loss_term(pred.probs[i], target.frames[i / n].test(i % n), params);
  }
  return sum / static_cast<double>(pred.probs.size());
}

std::vector<double> focal_loss_grad(const PredictionGrid& pred, const OccupancyGrid4D& target,
                                    const FocalLossParams& params) {
  params.validate();
  pred.validate();
  if (pred.spec != target.spec || pred.timesteps != target.frames.size()) {
    throw ValidationError("prediction and target shapes differ");
  }
  const std::size_t n = pred.spec.voxel_count();
  const double scale = 1.0 / static_cast<double>(pred.probs.size());
  std::vector<double> grad(pred.probs.size(), 0.0);
  for (std::size_t i = 0; i < pred.probs.size(); ++i) {
    const double p = pred.probs[i];
    if (p < params.clamp_eps || p > 1.0 - params.clamp_eps) continue;
    const bool occupied = target.frames[i / n].test(i % n);
    if (occupied) {
      const double q = 1.0 - p;
      const double hard =
          params.gamma == 0.0 ? 0.0 : params.gamma * std::pow(q, params.gamma - 1.0) * std::log(p);
      grad[i] = -params.alpha * scale * (std::pow(q, params.gamma) / p - hard);
    } else {
      const double hard = params.gamma == 0.0
                              ? 0.0
                              : params.gamma * std::pow(p, params.gamma - 1.0) * std::log(1.0 - p);
      grad[i] = (1.0 - params.alpha) * scale * (std::pow(p, params.gamma) / (1.0 - p) - hard);
    }
  }
  return grad;
}

double binary_iou(const OccupancyGrid& pred, const OccupancyGrid& gt) {
  if (pred.spec() != gt.spec()) throw ValidationError("binary_iou: grid specs differ");
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.spec().voxel_count(); ++i) {
    const bool a = pred.test(i);
    const bool b = gt.test(i);
    tp += a && b;
    fp += a && !b;
    fn += !a && b;
  }
  const std::int64_t denom = tp + fp + fn;
  return denom == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(denom);
}

ConfusionMatrix confusion(const SemanticGrid& pred, const SemanticGrid& gt, std::uint32_t k) {
  if (pred.spec != gt.spec) throw ValidationError("confusion: grid specs differ");
  if (k == 0 || k >= kUnlabeled) throw ValidationError("confusion: class count out of range");
  ConfusionMatrix cm;
  cm.k = k;
  cm.counts.assign(static_cast<std::size_t>(k) * (k + 1), 0);
  for (std::size_t i = 0; i < gt.classes.size(); ++i) {
    const std::uint8_t g = gt.classes[i];
    if (g == kUnlabeled) {
      ++cm.ignored;
      continue;
    }
    const std::uint8_t p = pred.classes[i];
    if (g >= k || (p != kUnlabeled && p >= k)) throw ValidationError("confusion: class id >= k");
    const std::uint32_t col = p == kUnlabeled ? k : p;
    ++cm.counts[static_cast<std::size_t>(g) * (k + 1) + col];
  }
  return cm;
}

PredictionGrid decoder_forward(const VoxelFeature& v, const DecoderParams& params,
                               const GridSpec& spec) {
  spec.validate();
  if (params.layers.empty()) throw ValidationError("decoder needs at least one layer");
  params.validate(v.channels, params.layers.back().out_channels);

  const int depth = static_cast<int>(v.depth), height = static_cast<int>(v.height),
            width = static_cast<int>(v.width);
  VoxelFeature current = v;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const ConvLayer& layer = params.layers[l];
    VoxelFeature next;
    next.channels = layer.out_channels;
    next.depth = v.depth;
    next.height = v.height;
    next.width = v.width;
    next.data.assign(static_cast<std::size_t>(layer.out_channels) * v.depth * v.height * v.width,
                     0.0);
    const int pz = static_cast<int>(layer.kz) / 2;
    const int py = static_cast<int>(layer.ky) / 2;
    const int px = static_cast<int>(layer.kx) / 2;
    for (std::uint32_t oc = 0; oc < layer.out_channels; ++oc) {
      for (int z = 0; z < depth; ++z) {
        for (int y = 0; y < height; ++y) {
          for (int x = 0; x < width; ++x) {
            double acc = layer.bias[oc];
            for (std::uint32_t ic = 0; ic < layer.in_channels; ++ic) {
              for (std::uint32_t dz = 0; dz < layer.kz; ++dz) {
                const int zi = z + static_cast<int>(dz) - pz;
                if (zi < 0 || zi >= depth) continue;
                for (std::uint32_t dy = 0; dy < layer.ky; ++dy) {
                  const int yi = y + static_cast<int>(dy) - py;
                  if (yi < 0 || yi >= height) continue;
                  for (std::uint32_t dx = 0; dx < layer.kx; ++dx) {
                    const int xi = x + static_cast<int>(dx) - px;
                    if (xi < 0 || xi >= width) continue;
                    acc += layer.weights[layer.weight_index(oc, ic, dz, dy, dx)] *
                           current.data[current.index(ic, static_cast<std::uint32_t>(zi),
                                                      static_cast<std::uint32_t>(yi),
                                                      static_cast<std::uint32_t>(xi))];
                  }
                }
              }
            }
            next.data[next.index(oc, static_cast<std::uint32_t>(z), static_cast<std::uint32_t>(y),
                                 static_cast<std::uint32_t>(x))] = acc;
          }
        }
      }
    }
    if (l + 1 < params.layers.size()) {
      for (double& value : next.data) value = std::max(0.0, value);
    }
    current = std::move(next);
  }

  PredictionGrid out;
  out.spec = spec;
  out.timesteps = params.layers.back().out_channels;
  out.probs.resize(current.data.size());
  for (std::size_t i = 0; i < current.data.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-current.data[i]));
    out.probs[i] = std::clamp(p, 1e-12, 1.0 - 1e-12);
  }
  return out;
}

}  // namespace occkit::ref
