// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#include "occkit/toy_predictor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "occkit/errors.hpp"
#include "occkit/rng.hpp"

namespace occkit {

namespace {

// Keeps sigmoid outputs strictly inside (0,1) even for saturated logits.
// Far tighter than any sensible loss clamp, so saturated voxels still fall
// into the loss's own flat region.
constexpr double kProbFloor = 1e-12;

double sigmoid(double x) {
  const double p = 1.0 / (1.0 + std::exp(-x));
  return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

}  // namespace

VoxelFeature reshape_bev(const BevFeature& f, std::uint32_t d) {
  if (d == 0 || f.channels % d != 0) {
    throw ValidationError("channel count " + std::to_string(f.channels) +
                          " is not divisible by height slices " + std::to_string(d));
  }
  if (f.data.size() != static_cast<std::size_t>(f.channels) * f.height * f.width) {
    throw ValidationError("feature tensor size does not match its declared shape");
  }
  VoxelFeature v;
  v.channels = f.channels / d;
  v.depth = d;
  v.height = f.height;
  v.width = f.width;
  v.data.resize(f.data.size());
  const std::size_t plane = static_cast<std::size_t>(f.height) * f.width;
  for (std::uint32_t c = 0; c < f.channels; ++c) {
    const std::uint32_t slot = c / d;
    const std::uint32_t z = c % d;
    std::copy_n(f.data.begin() + static_cast<std::ptrdiff_t>(c * plane), plane,
                v.data.begin() + static_cast<std::ptrdiff_t>(v.index(slot, z, 0, 0)));
  }
  return v;
}

BevFeature reshape_bev_inverse(const VoxelFeature& v) {
  BevFeature f;
  f.channels = v.channels * v.depth;
  f.height = v.height;
  f.width = v.width;
  f.data.resize(v.data.size());
  const std::size_t plane = static_cast<std::size_t>(v.height) * v.width;
  for (std::uint32_t c = 0; c < f.channels; ++c) {
    const std::uint32_t slot = c / v.depth;
    const std::uint32_t z = c % v.depth;
    std::copy_n(v.data.begin() + static_cast<std::ptrdiff_t>(v.index(slot, z, 0, 0)), plane,
                f.data.begin() + static_cast<std::ptrdiff_t>(c * plane));
  }
  return f;
}

std::size_t DecoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const ConvLayer& layer : layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

void DecoderParams::validate(std::uint32_t in_channels, std::uint32_t timesteps) const {
  if (layers.empty()) throw ValidationError("decoder needs at least one layer");
  std::uint32_t chain = in_channels;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const ConvLayer& layer = layers[l];
    if (layer.in_channels != chain) {
      throw ValidationError("layer " + std::to_string(l) + " expects " +
                            std::to_string(layer.in_channels) + " channels, got " +
                            std::to_string(chain));
    }
    if (layer.kz % 2 == 0 || layer.ky % 2 == 0 || layer.kx % 2 == 0) {
      throw ValidationError("kernel extents must be odd to preserve the spatial shape");
    }
    const std::size_t expect = static_cast<std::size_t>(layer.out_channels) * layer.in_channels *
                               layer.kz * layer.ky * layer.kx;
    if (layer.weights.size() != expect || layer.bias.size() != layer.out_channels) {
      throw ValidationError("layer " + std::to_string(l) + " weight/bias sizes inconsistent");
    }
    chain = layer.out_channels;
  }
  if (chain != timesteps) {
    throw ValidationError("final layer must emit one channel per timestep (" +
                          std::to_string(timesteps) + "), emits " + std::to_string(chain));
  }
}

namespace {

VoxelFeature conv3d(const VoxelFeature& in, const ConvLayer& layer) {
  VoxelFeature out;
  out.channels = layer.out_channels;
  out.depth = in.depth;
  out.height = in.height;
  out.width = in.width;
  out.data.assign(static_cast<std::size_t>(out.channels) * out.depth * out.height * out.width, 0.0);
  const int pz = static_cast<int>(layer.kz) / 2;
  const int py = static_cast<int>(layer.ky) / 2;
  const int px = static_cast<int>(layer.kx) / 2;
  const int depth = static_cast<int>(in.depth), height = static_cast<int>(in.height),
            width = static_cast<int>(in.width);
  const double* src = in.data.data();
  const double* w = layer.weights.data();
  double* dst = out.data.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t oc = 0; oc < static_cast<std::int64_t>(layer.out_channels); ++oc) {
    for (std::int64_t z = 0; z < depth; ++z) {
      const int dz_lo = std::max(0, pz - static_cast<int>(z));
      const int dz_hi = std::min(static_cast<int>(layer.kz), depth + pz - static_cast<int>(z));
      for (int y = 0; y < height; ++y) {
        const int dy_lo = std::max(0, py - y);
        const int dy_hi = std::min(static_cast<int>(layer.ky), height + py - y);
        for (int x = 0; x < width; ++x) {
          const int dx_lo = std::max(0, px - x);
          const int dx_hi = std::min(static_cast<int>(layer.kx), width + px - x);
          double acc = layer.bias[static_cast<std::size_t>(oc)];
          for (std::uint32_t ic = 0; ic < layer.in_channels; ++ic) {
            for (int dz = dz_lo; dz < dz_hi; ++dz) {
              const int zi = static_cast<int>(z) + dz - pz;
              for (int dy = dy_lo; dy < dy_hi; ++dy) {
                const int yi = y + dy - py;
                const std::size_t in_row =
                    ((static_cast<std::size_t>(ic) * in.depth + static_cast<std::size_t>(zi)) *
                         in.height +
                     static_cast<std::size_t>(yi)) *
                    in.width;
                const std::size_t w_row = layer.weight_index(
                    static_cast<std::uint32_t>(oc), ic, static_cast<std::uint32_t>(dz),
                    static_cast<std::uint32_t>(dy), 0);
                for (int dx = dx_lo; dx < dx_hi; ++dx) {
                  acc += w[w_row + static_cast<std::size_t>(dx)] *
                         src[in_row + static_cast<std::size_t>(x + dx - px)];
                }
              }
            }
          }
          dst[out.index(static_cast<std::uint32_t>(oc), static_cast<std::uint32_t>(z),
                        static_cast<std::uint32_t>(y), static_cast<std::uint32_t>(x))] = acc;
        }
      }
    }
  }
  return out;
}

void relu_inplace(VoxelFeature& v) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(v.data.size()); ++i) {
    if (v.data[static_cast<std::size_t>(i)] < 0.0) v.data[static_cast<std::size_t>(i)] = 0.0;
  }
}

}  // namespace

PredictionGrid decoder_forward(const VoxelFeature& v, const DecoderParams& params,
                               const GridSpec& spec, DecoderTrace* trace) {
  spec.validate();
  if (v.depth != spec.nz || v.height != spec.ny || v.width != spec.nx) {
    throw ValidationError("feature volume does not match the grid dims");
  }
  if (params.layers.empty()) throw ValidationError("decoder needs at least one layer");
  params.validate(v.channels, params.layers.back().out_channels);

  VoxelFeature current = v;
  if (trace != nullptr) trace->inputs.clear();
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    if (trace != nullptr) trace->inputs.push_back(current);
    VoxelFeature next = conv3d(current, params.layers[l]);
    if (l + 1 < params.layers.size()) relu_inplace(next);
    current = std::move(next);
  }
  if (trace != nullptr) trace->logits = current;

  PredictionGrid pred;
  pred.spec = spec;
  pred.timesteps = params.layers.back().out_channels;
  pred.probs.resize(current.data.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(current.data.size()); ++i) {
    pred.probs[static_cast<std::size_t>(i)] = sigmoid(current.data[static_cast<std::size_t>(i)]);
  }
  return pred;
}

namespace {

// dW, db and d(input) for one layer. Every output cell is a serial sum in a
// fixed order, so results do not depend on the thread count.
void conv3d_backward(const VoxelFeature& in, const ConvLayer& layer, const VoxelFeature& d_out,
                     ConvLayer& d_layer, VoxelFeature& d_in) {
  const int pz = static_cast<int>(layer.kz) / 2;
  const int py = static_cast<int>(layer.ky) / 2;
  const int px = static_cast<int>(layer.kx) / 2;
  const int depth = static_cast<int>(in.depth), height = static_cast<int>(in.height),
            width = static_cast<int>(in.width);

  d_layer.out_channels = layer.out_channels;
  d_layer.in_channels = layer.in_channels;
  d_layer.kz = layer.kz;
  d_layer.ky = layer.ky;
  d_layer.kx = layer.kx;
  d_layer.weights.assign(layer.weights.size(), 0.0);
  d_layer.bias.assign(layer.bias.size(), 0.0);

#pragma omp parallel for schedule(static)
  for (std::int64_t oc = 0; oc < static_cast<std::int64_t>(layer.out_channels); ++oc) {
    double acc = 0.0;
    const std::size_t base = d_out.index(static_cast<std::uint32_t>(oc), 0, 0, 0);
    const std::size_t volume = static_cast<std::size_t>(depth) * height * width;
    for (std::size_t i = 0; i < volume; ++i) acc += d_out.data[base + i];
    d_layer.bias[static_cast<std::size_t>(oc)] = acc;
  }

#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t oc = 0; oc < static_cast<std::int64_t>(layer.out_channels); ++oc) {
    for (std::int64_t ic = 0; ic < static_cast<std::int64_t>(layer.in_channels); ++ic) {
      for (int dz = 0; dz < static_cast<int>(layer.kz); ++dz) {
        const int z_lo = std::max(0, pz - dz);
        const int z_hi = std::min(depth, depth + pz - dz);
        for (int dy = 0; dy < static_cast<int>(layer.ky); ++dy) {
          const int y_lo = std::max(0, py - dy);
          const int y_hi = std::min(height, height + py - dy);
          for (int dx = 0; dx < static_cast<int>(layer.kx); ++dx) {
            const int x_lo = std::max(0, px - dx);
            const int x_hi = std::min(width, width + px - dx);
            double acc = 0.0;
            for (int z = z_lo; z < z_hi; ++z) {
              const int zi = z + dz - pz;
              for (int y = y_lo; y < y_hi; ++y) {
                const int yi = y + dy - py;
                const std::size_t out_row = d_out.index(static_cast<std::uint32_t>(oc),
                                                        static_cast<std::uint32_t>(z),
                                                        static_cast<std::uint32_t>(y), 0);
                const std::size_t in_row =
                    in.index(static_cast<std::uint32_t>(ic), static_cast<std::uint32_t>(zi),
                             static_cast<std::uint32_t>(yi), 0);
                for (int x = x_lo; x < x_hi; ++x) {
                  acc += d_out.data[out_row + static_cast<std::size_t>(x)] *
                         in.data[in_row + static_cast<std::size_t>(x + dx - px)];
                }
              }
            }
            d_layer.weights[layer.weight_index(
                static_cast<std::uint32_t>(oc), static_cast<std::uint32_t>(ic),
                static_cast<std::uint32_t>(dz), static_cast<std::uint32_t>(dy),
                static_cast<std::uint32_t>(dx))] = acc;
          }
        }
      }
    }
  }

  d_in.channels = in.channels;
  d_in.depth = in.depth;
  d_in.height = in.height;
  d_in.width = in.width;
  d_in.data.assign(in.data.size(), 0.0);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t ic = 0; ic < static_cast<std::int64_t>(layer.in_channels); ++ic) {
    for (std::int64_t zi = 0; zi < depth; ++zi) {
      for (int yi = 0; yi < height; ++yi) {
        for (int xi = 0; xi < width; ++xi) {
          double acc = 0.0;
          for (std::uint32_t oc = 0; oc < layer.out_channels; ++oc) {
            for (int dz = 0; dz < static_cast<int>(layer.kz); ++dz) {
              const int z = static_cast<int>(zi) - dz + pz;
              if (z < 0 || z >= depth) continue;
              for (int dy = 0; dy < static_cast<int>(layer.ky); ++dy) {
                const int y = yi - dy + py;
                if (y < 0 || y >= height) continue;
                for (int dx = 0; dx < static_cast<int>(layer.kx); ++dx) {
                  const int x = xi - dx + px;
                  if (x < 0 || x >= width) continue;
                  acc += layer.weights[layer.weight_index(
                             oc, static_cast<std::uint32_t>(ic), static_cast<std::uint32_t>(dz),
                             static_cast<std::uint32_t>(dy), static_cast<std::uint32_t>(dx))] *
                         d_out.data[d_out.index(oc, static_cast<std::uint32_t>(z),
                                                static_cast<std::uint32_t>(y),
                                                static_cast<std::uint32_t>(x))];
                }
              }
            }
          }
          d_in.data[d_in.index(static_cast<std::uint32_t>(ic), static_cast<std::uint32_t>(zi),
                               static_cast<std::uint32_t>(yi), static_cast<std::uint32_t>(xi))] =
              acc;
        }
      }
    }
  }
}

}  // namespace

DecoderGradients decoder_backward(const VoxelFeature& v, const DecoderParams& params,
                                  const std::vector<double>& upstream, const DecoderTrace* trace) {
  DecoderTrace local;
  if (trace == nullptr) {
    decoder_forward(v, params,
                    GridSpec{Point3{}, 1.0, 1.0, 1.0, v.depth, v.height, v.width}, &local);
    trace = &local;
  }
  if (upstream.size() != trace->logits.data.size()) {
    throw ValidationError("upstream gradient size does not match the decoder output");
  }

  // Through the sigmoid: d(loss)/d(logit) = upstream * p * (1 - p).
  VoxelFeature d_current = trace->logits;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(d_current.data.size()); ++i) {
    const double p = sigmoid(trace->logits.data[static_cast<std::size_t>(i)]);
    d_current.data[static_cast<std::size_t>(i)] =
        upstream[static_cast<std::size_t>(i)] * p * (1.0 - p);
  }

  DecoderGradients grads;
  grads.params.layers.resize(params.layers.size());
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    VoxelFeature d_in;
    conv3d_backward(trace->inputs[l], params.layers[l], d_current, grads.params.layers[l], d_in);
    if (l > 0) {
      // Rectifier mask: its input is the stored (already rectified) tensor,
      // which is positive exactly where the pre-activation was.
      const VoxelFeature& gate = trace->inputs[l];
#pragma omp parallel for schedule(static)
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(d_in.data.size()); ++i) {
        if (gate.data[static_cast<std::size_t>(i)] <= 0.0) {
          d_in.data[static_cast<std::size_t>(i)] = 0.0;
        }
      }
    }
    d_current = std::move(d_in);
  }
  grads.input = std::move(d_current);
  return grads;
}

ToyScene make_toy_scene(const ToyConfig& cfg) {
  if (cfg.depth == 0 || cfg.height == 0 || cfg.width == 0 || cfg.timesteps == 0 ||
      cfg.feature_slots == 0) {
    throw ValidationError("toy scene dims must be >= 1");
  }
  Rng rng(cfg.seed);

  GridSpec spec;
  spec.origin = Point3{0.0, 0.0, 0.0};
  spec.voxel_z = spec.voxel_y = spec.voxel_x = 1.0;
  spec.nz = cfg.depth;
  spec.ny = cfg.height;
  spec.nx = cfg.width;

  // Ground slab plus a handful of boxes; boxes drift by an integer offset
  // per timestep.
  struct Box {
    std::int64_t z0, y0, x0, dz, dy, dx, vy, vx;
  };
  std::vector<Box> boxes;
  const std::size_t n_boxes = 4 + rng.below(4);
  for (std::size_t b = 0; b < n_boxes; ++b) {
    Box box;
    box.dz = 2 + static_cast<std::int64_t>(rng.below(std::max<std::uint64_t>(1, cfg.depth / 4)));
    box.dy = 3 + static_cast<std::int64_t>(rng.below(std::max<std::uint64_t>(1, cfg.height / 4)));
    box.dx = 3 + static_cast<std::int64_t>(rng.below(std::max<std::uint64_t>(1, cfg.width / 4)));
    box.z0 = 1 + static_cast<std::int64_t>(rng.below(std::max<std::int64_t>(1, cfg.depth - box.dz)));
    box.y0 = static_cast<std::int64_t>(rng.below(std::max<std::int64_t>(1, cfg.height - box.dy)));
    box.x0 = static_cast<std::int64_t>(rng.below(std::max<std::int64_t>(1, cfg.width - box.dx)));
    box.vy = static_cast<std::int64_t>(rng.below(3)) - 1;
    box.vx = static_cast<std::int64_t>(rng.below(3)) - 1;
    boxes.push_back(box);
  }

  ToyScene scene;
  scene.target.spec = spec;
  for (std::uint32_t t = 0; t < cfg.timesteps; ++t) {
    OccupancyGrid frame(spec);
    for (std::uint32_t y = 0; y < cfg.height; ++y) {
      for (std::uint32_t x = 0; x < cfg.width; ++x) frame.set(0, y, x);
    }
    for (const Box& box : boxes) {
      const std::int64_t y0 = box.y0 + box.vy * t;
      const std::int64_t x0 = box.x0 + box.vx * t;
      for (std::int64_t z = box.z0; z < box.z0 + box.dz && z < cfg.depth; ++z) {
        for (std::int64_t y = std::max<std::int64_t>(0, y0);
             y < y0 + box.dy && y < cfg.height; ++y) {
          for (std::int64_t x = std::max<std::int64_t>(0, x0);
               x < x0 + box.dx && x < cfg.width; ++x) {
            frame.set(static_cast<std::uint32_t>(z), static_cast<std::uint32_t>(y),
                      static_cast<std::uint32_t>(x));
          }
        }
      }
    }
    scene.target.frames.push_back(std::move(frame));
  }

  // Channel c = slot*depth + z carries a random-gain copy of the target at
  // height z (slot s looks at timestep s mod m), drowned in a bit of noise.
  BevFeature feature;
  feature.channels = cfg.feature_slots * cfg.depth;
  feature.height = cfg.height;
  feature.width = cfg.width;
  feature.data.resize(static_cast<std::size_t>(feature.channels) * cfg.height * cfg.width);
  std::vector<double> gains(static_cast<std::size_t>(cfg.feature_slots) * cfg.depth);
  for (double& g : gains) {
    const double magnitude = 0.5 + rng.uniform();
    g = rng.uniform() < 0.5 ? -magnitude : magnitude;
  }
  constexpr double kNoise = 0.1;
  for (std::uint32_t s = 0; s < cfg.feature_slots; ++s) {
    const OccupancyGrid& frame = scene.target.frames[s % cfg.timesteps];
    for (std::uint32_t z = 0; z < cfg.depth; ++z) {
      const double gain = gains[static_cast<std::size_t>(s) * cfg.depth + z];
      for (std::uint32_t y = 0; y < cfg.height; ++y) {
        for (std::uint32_t x = 0; x < cfg.width; ++x) {
          const double signal = frame.test(z, y, x) ? 1.0 : -1.0;
          feature.data[feature.index(s * cfg.depth + z, y, x)] =
              gain * signal + kNoise * rng.normal();
        }
      }
    }
  }
  scene.feature = std::move(feature);
  return scene;
}

namespace {

DecoderParams init_params(const ToyConfig& cfg, std::uint32_t in_channels) {
  if (cfg.layers == 0) throw ValidationError("decoder needs at least one layer");
  if (cfg.kernel % 2 == 0) throw ValidationError("kernel extent must be odd");
  Rng rng(cfg.seed ^ 0x5eedf00dULL);
  DecoderParams params;
  std::uint32_t chain = in_channels;
  for (std::uint32_t l = 0; l < cfg.layers; ++l) {
    const bool last = l + 1 == cfg.layers;
    ConvLayer layer;
    layer.in_channels = chain;
    layer.out_channels = last ? cfg.timesteps : cfg.hidden_channels;
    layer.kz = layer.ky = layer.kx = cfg.kernel;
    const std::size_t fan_in =
        static_cast<std::size_t>(layer.in_channels) * layer.kz * layer.ky * layer.kx;
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    layer.weights.resize(static_cast<std::size_t>(layer.out_channels) * fan_in);
    for (double& w : layer.weights) w = scale * rng.normal();
    layer.bias.assign(layer.out_channels, 0.0);
    chain = layer.out_channels;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

std::vector<double*> parameter_view(DecoderParams& params) {
  std::vector<double*> view;
  view.reserve(params.parameter_count());
  for (ConvLayer& layer : params.layers) {
    for (double& w : layer.weights) view.push_back(&w);
    for (double& b : layer.bias) view.push_back(&b);
  }
  return view;
}

}  // namespace

TrainResult train_toy(const ToyScene& scene, const ToyConfig& cfg) {
  cfg.loss.validate();
  const VoxelFeature voxels = reshape_bev(scene.feature, cfg.depth);
  DecoderParams params = init_params(cfg, voxels.channels);
  params.validate(voxels.channels, static_cast<std::uint32_t>(scene.target.frames.size()));

  TrainResult result;
  result.loss_history.reserve(cfg.iters + 1);
  for (std::uint32_t iter = 0; iter <= cfg.iters; ++iter) {
    DecoderTrace trace;
    PredictionGrid pred = decoder_forward(voxels, params, scene.target.spec, &trace);
    const double loss = focal_loss(pred, scene.target, cfg.loss);
    if (!std::isfinite(loss)) {
      throw ValidationError("training diverged at iteration " + std::to_string(iter) +
                            ": loss is not finite");
    }
    result.loss_history.push_back(loss);
    if (iter == cfg.iters) {
      result.prediction = std::move(pred);
      break;
    }
    const std::vector<double> upstream = focal_loss_grad(pred, scene.target, cfg.loss);
    const DecoderGradients grads = decoder_backward(voxels, params, upstream, &trace);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      ConvLayer& layer = params.layers[l];
      const ConvLayer& g = grads.params.layers[l];
      for (std::size_t i = 0; i < layer.weights.size(); ++i) {
        layer.weights[i] -= cfg.lr * g.weights[i];
      }
      for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= cfg.lr * g.bias[i];
    }
  }
  result.params = std::move(params);
  return result;
}

GradCheckResult fd_gradcheck(const ToyConfig& cfg, double eps) {
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  const ToyScene scene = make_toy_scene(cfg);
  const VoxelFeature voxels = reshape_bev(scene.feature, cfg.depth);
  DecoderParams params = init_params(cfg, voxels.channels);
  if (params.parameter_count() > 1000) {
    throw ValidationError("gradient check is limited to 1000 parameters, got " +
                          std::to_string(params.parameter_count()));
  }

  DecoderTrace trace;
  const PredictionGrid pred = decoder_forward(voxels, params, scene.target.spec, &trace);
  const std::vector<double> upstream = focal_loss_grad(pred, scene.target, cfg.loss);
  const DecoderGradients grads = decoder_backward(voxels, params, upstream, &trace);

  DecoderParams probe = params;
  std::vector<double*> view = parameter_view(probe);
  std::vector<double> analytic;
  analytic.reserve(view.size());
  {
    DecoderParams g = grads.params;
    for (const double* p : parameter_view(g)) analytic.push_back(*p);
  }

  const auto loss_at = [&]() {
    return focal_loss(decoder_forward(voxels, probe, scene.target.spec), scene.target, cfg.loss);
  };

  GradCheckResult result;
  constexpr double kFloor = 1e-10;
  for (std::size_t i = 0; i < view.size(); ++i) {
    const double saved = *view[i];
    *view[i] = saved + eps;
    const double hi = loss_at();
    *view[i] = saved - eps;
    const double lo = loss_at();
    *view[i] = saved;
    const double fd = (hi - lo) / (2.0 * eps);
    const double denom = std::max(std::abs(analytic[i]), std::abs(fd));
    if (denom < kFloor) {
      ++result.skipped;
      continue;
    }
    result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic[i] - fd) / denom);
    ++result.checked;
  }
  return result;
}

}  // namespace occkit
