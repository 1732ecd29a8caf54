// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0
//
// Times the OpenMP kernels against the serial reference implementations and
// cross-checks their outputs. Run with an optional thread count argument.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "occkit/dataset.hpp"
#include "occkit/loss.hpp"
#include "occkit/metrics.hpp"
#include "occkit/occupancy.hpp"
#include "occkit/parallel.hpp"
#include "occkit/reference.hpp"
#include "occkit/rng.hpp"
#include "occkit/toy_predictor.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double time_ms(Fn&& fn, int repeats = 3) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    fn();
    const auto t1 = Clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms, bool ok) {
  std::printf("%-28s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   %s\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms, ok ? "outputs match" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) occkit::set_thread_count(std::atoi(argv[1]));
  std::printf("threads: %d\n\n", occkit::thread_count());
  occkit::Rng rng(7);

  // voxelize: 2M points into a 20x256x256 grid
  {
    occkit::GridSpec spec;
    spec.origin = occkit::Point3{-51.2, -51.2, -5.0};
    spec.voxel_z = spec.voxel_y = spec.voxel_x = 0.4;
    spec.nz = 20;
    spec.ny = 256;
    spec.nx = 256;
    occkit::PointCloud cloud;
    cloud.points.reserve(2'000'000);
    for (std::size_t i = 0; i < 2'000'000; ++i) {
      cloud.points.push_back(occkit::Point3{rng.uniform_in(-55.0, 55.0),
                                            rng.uniform_in(-55.0, 55.0),
                                            rng.uniform_in(-6.0, 4.0)});
    }
    occkit::OccupancyGrid serial_grid, parallel_grid;
    const double s = time_ms([&] { serial_grid = occkit::ref::voxelize(cloud, spec); });
    const double p = time_ms([&] { parallel_grid = occkit::voxelize(cloud, spec); });
    report("voxelize 2M pts", s, p, serial_grid == parallel_grid);
  }

  // focal loss + gradient on a 4x32x128x128 prediction
  {
    occkit::GridSpec spec;
    spec.voxel_z = spec.voxel_y = spec.voxel_x = 0.5;
    spec.nz = 32;
    spec.ny = 128;
    spec.nx = 128;
    occkit::OccupancyGrid4D target;
    target.spec = spec;
    occkit::PredictionGrid pred;
    pred.spec = spec;
    pred.timesteps = 4;
    pred.probs.reserve(4 * spec.voxel_count());
    for (std::uint32_t t = 0; t < 4; ++t) {
      occkit::OccupancyGrid frame(spec);
      for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
        if (rng.uniform() < 0.12) frame.set(i);
        pred.probs.push_back(rng.uniform_in(0.01, 0.99));
      }
      target.frames.push_back(std::move(frame));
    }
    const occkit::FocalLossParams params;
    double serial_loss = 0.0, parallel_loss = 0.0;
    const double s = time_ms([&] { serial_loss = occkit::ref::focal_loss(pred, target, params); });
    const double p = time_ms([&] { parallel_loss = occkit::focal_loss(pred, target, params); });
    const double rel = std::abs(serial_loss - parallel_loss) / std::abs(serial_loss);
    report("focal loss 2.1M voxels", s, p, rel < 1e-12);

    std::vector<double> gs, gp;
    const double sg = time_ms([&] { gs = occkit::ref::focal_loss_grad(pred, target, params); });
    const double pg = time_ms([&] { gp = occkit::focal_loss_grad(pred, target, params); });
    report("focal gradient", sg, pg, gs == gp);
  }

  // confusion matrix on 8M voxels
  {
    occkit::GridSpec spec;
    spec.nz = 32;
    spec.ny = 512;
    spec.nx = 512;
    occkit::SemanticGrid pred{spec, {}}, gt{spec, {}};
    pred.classes.resize(spec.voxel_count());
    gt.classes.resize(spec.voxel_count());
    for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
      gt.classes[i] = rng.uniform() < 0.2 ? occkit::kUnlabeled
                                          : static_cast<std::uint8_t>(rng.below(17));
      pred.classes[i] = rng.uniform() < 0.1 ? occkit::kUnlabeled
                                            : static_cast<std::uint8_t>(rng.below(17));
    }
    occkit::ConfusionMatrix cs, cp;
    const double s = time_ms([&] { cs = occkit::ref::confusion(pred, gt, 17); });
    const double p = time_ms([&] { cp = occkit::confusion(pred, gt, 17); });
    report("confusion 8.4M voxels", s, p, cs.counts == cp.counts && cs.ignored == cp.ignored);
  }

  // decoder forward on the toy scene
  {
    occkit::ToyConfig cfg;
    const occkit::ToyScene scene = occkit::make_toy_scene(cfg);
    const occkit::VoxelFeature voxels = occkit::reshape_bev(scene.feature, cfg.depth);
    occkit::DecoderParams params;
    {
      occkit::Rng init(11);
      std::uint32_t chain = voxels.channels;
      for (std::uint32_t l = 0; l < 2; ++l) {
        occkit::ConvLayer layer;
        layer.in_channels = chain;
        layer.out_channels = l == 1 ? 1 : 8;
        layer.kz = layer.ky = layer.kx = 3;
        layer.weights.resize(static_cast<std::size_t>(layer.out_channels) * layer.in_channels * 27);
        for (double& w : layer.weights) w = 0.05 * init.normal();
        layer.bias.assign(layer.out_channels, 0.0);
        chain = layer.out_channels;
        params.layers.push_back(std::move(layer));
      }
    }
    occkit::PredictionGrid ps, pp;
    const double s =
        time_ms([&] { ps = occkit::ref::decoder_forward(voxels, params, scene.target.spec); });
    const double p = time_ms([&] { pp = occkit::decoder_forward(voxels, params, scene.target.spec); });
    double max_diff = 0.0;
    for (std::size_t i = 0; i < ps.probs.size(); ++i) {
      max_diff = std::max(max_diff, std::abs(ps.probs[i] - pp.probs[i]));
    }
    report("decoder forward 16x32x32", s, p, max_diff < 1e-10);
  }

  return 0;
}
