// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#include "occkit/cli.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string_view>

#include <CLI11.hpp>
#include <json.hpp>

#include "occkit/dataset.hpp"
#include "occkit/errors.hpp"
#include "occkit/metrics.hpp"
#include "occkit/parallel.hpp"
#include "occkit/toy_predictor.hpp"

namespace occkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Grid geometry crosses file boundaries at single precision; rounding here
// keeps configured grids bit-stable through OCCG round trips.
double f32_round(double v) { return to_f32(v); }

}  // namespace

PipelineConfig default_config() {
  PipelineConfig cfg;
  cfg.grid.origin = Point3{f32_round(-51.2), f32_round(-51.2), f32_round(-5.0)};
  cfg.grid.voxel_z = cfg.grid.voxel_y = cfg.grid.voxel_x = f32_round(0.4);
  cfg.grid.nz = 20;
  cfg.grid.ny = 256;
  cfg.grid.nx = 256;
  cfg.fusion.keyframes_before = 1;
  cfg.fusion.keyframes_after = 1;
  cfg.fusion.include_sweeps = true;
  return cfg;
}

namespace {

json grid_to_json(const GridSpec& g) {
  return json{{"origin", {{"x", g.origin.x}, {"y", g.origin.y}, {"z", g.origin.z}}},
              {"voxel_size", {{"z", g.voxel_z}, {"y", g.voxel_y}, {"x", g.voxel_x}}},
              {"dims", {{"z", g.nz}, {"y", g.ny}, {"x", g.nx}}}};
}

json fusion_to_json(const FusionConfig& f) {
  json j{{"keyframes_before", f.keyframes_before},
         {"keyframes_after", f.keyframes_after},
         {"include_sweeps", f.include_sweeps},
         {"dynamic_aware", f.dynamic_aware},
         {"box_margin", f.box_margin}};
  j["max_range"] = f.max_range ? json(*f.max_range) : json(nullptr);
  return j;
}

json loss_to_json(const FocalLossParams& l) {
  return json{{"alpha", l.alpha},
              {"gamma", l.gamma},
              {"clamp_eps", l.clamp_eps},
              {"mode", to_string(l.mode)}};
}

json config_to_json(const PipelineConfig& cfg) {
  return json{{"grid", grid_to_json(cfg.grid)},
              {"fusion", fusion_to_json(cfg.fusion)},
              {"loss", loss_to_json(cfg.loss)},
              {"m", cfg.m},
              {"threads", cfg.threads}};
}

void overlay_grid(GridSpec& g, const json& j) {
  if (auto it = j.find("origin"); it != j.end()) {
    g.origin.x = f32_round(it->value("x", g.origin.x));
    g.origin.y = f32_round(it->value("y", g.origin.y));
    g.origin.z = f32_round(it->value("z", g.origin.z));
  }
  if (auto it = j.find("voxel_size"); it != j.end()) {
    g.voxel_z = f32_round(it->value("z", g.voxel_z));
    g.voxel_y = f32_round(it->value("y", g.voxel_y));
    g.voxel_x = f32_round(it->value("x", g.voxel_x));
  }
  if (auto it = j.find("dims"); it != j.end()) {
    g.nz = it->value("z", g.nz);
    g.ny = it->value("y", g.ny);
    g.nx = it->value("x", g.nx);
  }
}

void overlay_config(PipelineConfig& cfg, const json& j) {
  if (auto it = j.find("grid"); it != j.end()) overlay_grid(cfg.grid, *it);
  if (auto it = j.find("fusion"); it != j.end()) {
    cfg.fusion.keyframes_before = it->value("keyframes_before", cfg.fusion.keyframes_before);
    cfg.fusion.keyframes_after = it->value("keyframes_after", cfg.fusion.keyframes_after);
    cfg.fusion.include_sweeps = it->value("include_sweeps", cfg.fusion.include_sweeps);
    cfg.fusion.dynamic_aware = it->value("dynamic_aware", cfg.fusion.dynamic_aware);
    cfg.fusion.box_margin = it->value("box_margin", cfg.fusion.box_margin);
    if (auto mr = it->find("max_range"); mr != it->end()) {
      if (mr->is_null()) {
        cfg.fusion.max_range.reset();
      } else {
        cfg.fusion.max_range = mr->get<double>();
      }
    }
  }
  if (auto it = j.find("loss"); it != j.end()) {
    cfg.loss.alpha = it->value("alpha", cfg.loss.alpha);
    cfg.loss.gamma = it->value("gamma", cfg.loss.gamma);
    cfg.loss.clamp_eps = it->value("clamp_eps", cfg.loss.clamp_eps);
    if (it->contains("mode")) cfg.loss.mode = focal_mode_from_string((*it)["mode"].get<std::string>());
  }
  cfg.m = j.value("m", cfg.m);
  cfg.threads = j.value("threads", cfg.threads);
}

}  // namespace

PipelineConfig load_config(const std::string& path, const PipelineConfig& base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("config " + path + ": " + e.what());
  }
  PipelineConfig cfg = base;
  try {
    overlay_config(cfg, j);
  } catch (const json::exception& e) {
    throw ValidationError("config " + path + ": " + e.what());
  }
  return cfg;
}

std::string config_to_json_string(const PipelineConfig& cfg) {
  return config_to_json(cfg).dump(2);
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text << '\n';
  if (!out) throw IoError("short write: " + path.string());
}

void echo_config(const fs::path& output, const PipelineConfig& cfg, const json& extra) {
  json j = config_to_json(cfg);
  for (const auto& [key, value] : extra.items()) j[key] = value;
  fs::path sidecar = output;
  sidecar += ".config.json";
  write_text(sidecar, j.dump(2));
}

void ensure_parent(const fs::path& path) {
  const fs::path parent = path.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

// Shared flag block for the commands that run the fusion pipeline.
struct PipelineArgs {
  std::string index_path;
  std::string frame_id;
  std::string config_path;
  std::string out_path;
  PipelineConfig cfg = default_config();

  // Defaults, then the config file, then whatever was set explicitly on the
  // command line (the parse step already staged those values into cfg).
  void resolve(const CLI::App& sub) {
    PipelineConfig merged = default_config();
    if (!config_path.empty()) merged = load_config(config_path, merged);
    auto was_set = [&sub](const std::string& flag) {
      const CLI::Option* opt = sub.get_option_no_throw(flag);
      return opt != nullptr && opt->count() > 0;
    };
    auto take = [&was_set](const std::string& flag, auto& dst, const auto& staged) {
      if (was_set(flag)) dst = staged;
    };
    take("--m", merged.m, cfg.m);
    take("--threads", merged.threads, cfg.threads);
    take("--before", merged.fusion.keyframes_before, cfg.fusion.keyframes_before);
    take("--after", merged.fusion.keyframes_after, cfg.fusion.keyframes_after);
    take("--sweeps", merged.fusion.include_sweeps, cfg.fusion.include_sweeps);
    take("--dynamic", merged.fusion.dynamic_aware, cfg.fusion.dynamic_aware);
    take("--box-margin", merged.fusion.box_margin, cfg.fusion.box_margin);
    take("--max-range", merged.fusion.max_range, cfg.fusion.max_range);
    take("--alpha", merged.loss.alpha, cfg.loss.alpha);
    take("--gamma", merged.loss.gamma, cfg.loss.gamma);
    take("--clamp-eps", merged.loss.clamp_eps, cfg.loss.clamp_eps);
    take("--mode", merged.loss.mode, cfg.loss.mode);
    if (was_set("--grid-origin")) merged.grid.origin = cfg.grid.origin;
    if (was_set("--grid-voxel")) {
      merged.grid.voxel_z = cfg.grid.voxel_z;
      merged.grid.voxel_y = cfg.grid.voxel_y;
      merged.grid.voxel_x = cfg.grid.voxel_x;
    }
    if (was_set("--grid-dims")) {
      merged.grid.nz = cfg.grid.nz;
      merged.grid.ny = cfg.grid.ny;
      merged.grid.nx = cfg.grid.nx;
    }
    cfg = merged;
    set_thread_count(cfg.threads);
  }
};

void add_fusion_flags(CLI::App* sub, PipelineConfig& cfg) {
  sub->add_option("--before", cfg.fusion.keyframes_before, "Preceding keyframes to fuse");
  sub->add_option("--after", cfg.fusion.keyframes_after, "Succeeding keyframes to fuse");
  sub->add_flag("--sweeps,!--no-sweeps", cfg.fusion.include_sweeps,
                "Include non-keyframes between the selected keyframes");
  sub->add_flag("--dynamic,!--no-dynamic", cfg.fusion.dynamic_aware,
                "Warp annotated-box points by their track motion");
  sub->add_option("--max-range", cfg.fusion.max_range,
                  "Drop fused points farther than this from the reference origin (m)");
  sub->add_option("--box-margin", cfg.fusion.box_margin, "Point-in-box inflation margin (m)");
}

void add_grid_flags(CLI::App* sub, PipelineConfig& cfg) {
  sub->add_option_function<std::vector<double>>(
         "--grid-origin",
         [&cfg](const std::vector<double>& v) {
           cfg.grid.origin = Point3{f32_round(v[0]), f32_round(v[1]), f32_round(v[2])};
         },
         "Grid min corner as x y z (m)")
      ->expected(3);
  sub->add_option_function<std::vector<double>>(
         "--grid-voxel",
         [&cfg](const std::vector<double>& v) {
           cfg.grid.voxel_z = f32_round(v[0]);
           cfg.grid.voxel_y = f32_round(v[1]);
           cfg.grid.voxel_x = f32_round(v[2]);
         },
         "Voxel size as z y x (m)")
      ->expected(3);
  sub->add_option_function<std::vector<std::uint32_t>>(
         "--grid-dims",
         [&cfg](const std::vector<std::uint32_t>& v) {
           cfg.grid.nz = v[0];
           cfg.grid.ny = v[1];
           cfg.grid.nx = v[2];
         },
         "Cell counts as z y x")
      ->expected(3);
}

CloudProvider file_provider(const fs::path& base_dir, std::size_t* dropped_total) {
  return [base_dir, dropped_total](const FrameRecord& frame) {
    CloudLoadResult loaded = load_cloud(base_dir / frame.cloud_path);
    if (dropped_total != nullptr) *dropped_total += loaded.dropped_nonfinite;
    return std::move(loaded.cloud);
  };
}

// ---- probability tensor file: 8 f32 header {m, D, H, W, vZ, vH, vW, 0},
//      then m*D*H*W f32 probabilities, (t,z,y,x) row-major ----

void write_probs(const PredictionGrid& pred, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  auto put = [&out](float f) { out.write(reinterpret_cast<const char*>(&f), sizeof f); };
  put(static_cast<float>(pred.timesteps));
  put(static_cast<float>(pred.spec.nz));
  put(static_cast<float>(pred.spec.ny));
  put(static_cast<float>(pred.spec.nx));
  put(static_cast<float>(pred.spec.voxel_z));
  put(static_cast<float>(pred.spec.voxel_y));
  put(static_cast<float>(pred.spec.voxel_x));
  put(0.0f);
  for (const double p : pred.probs) put(static_cast<float>(p));
  if (!out) throw IoError("short write: " + path.string());
}

PredictionGrid read_probs(const fs::path& path, const GridSpec& target_spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 8 * sizeof(float)) {
    throw PayloadLengthError(path.string() + ": too short for the 8-float header");
  }
  float header[8];
  std::memcpy(header, buf.data(), sizeof header);
  const auto m = static_cast<std::uint32_t>(header[0]);
  const auto nz = static_cast<std::uint32_t>(header[1]);
  const auto ny = static_cast<std::uint32_t>(header[2]);
  const auto nx = static_cast<std::uint32_t>(header[3]);
  if (m == 0 || nz == 0 || ny == 0 || nx == 0) {
    throw ValidationError(path.string() + ": header dims must be >= 1");
  }
  if (nz != target_spec.nz || ny != target_spec.ny || nx != target_spec.nx) {
    throw ValidationError(path.string() + ": prediction dims do not match the label grid");
  }
  if (header[4] != static_cast<float>(target_spec.voxel_z) ||
      header[5] != static_cast<float>(target_spec.voxel_y) ||
      header[6] != static_cast<float>(target_spec.voxel_x)) {
    throw ValidationError(path.string() + ": prediction voxel sizes do not match the label grid");
  }
  const std::size_t count = static_cast<std::size_t>(m) * nz * ny * nx;
  const std::size_t expected = (8 + count) * sizeof(float);
  if (buf.size() != expected) {
    throw PayloadLengthError(path.string() + ": payload length mismatch, file has " +
                             std::to_string(buf.size()) + " bytes, header implies " +
                             std::to_string(expected));
  }
  PredictionGrid pred;
  pred.spec = target_spec;
  pred.timesteps = m;
  pred.probs.resize(count);
  const char* payload = buf.data() + 8 * sizeof(float);
  for (std::size_t i = 0; i < count; ++i) {
    float f;
    std::memcpy(&f, payload + i * sizeof(float), sizeof f);
    pred.probs[i] = f;
  }
  return pred;
}

// Pooled TP/(TP+FP+FN) over all timesteps.
double pooled_binary_iou(const OccupancyGrid4D& pred, const OccupancyGrid4D& gt) {
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t t = 0; t < pred.frames.size(); ++t) {
    const auto& a = pred.frames[t].words();
    const auto& b = gt.frames[t].words();
    for (std::size_t w = 0; w < a.size(); ++w) {
      tp += std::popcount(a[w] & b[w]);
      fp += std::popcount(a[w] & ~b[w]);
      fn += std::popcount(~a[w] & b[w]);
    }
  }
  const std::int64_t denom = tp + fp + fn;
  return denom == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(denom);
}

int cmd_labels4d(const PipelineArgs& args, bool semantic) {
  const fs::path index_path(args.index_path);
  const FrameIndex index = load_index(index_path);
  std::size_t dropped = 0;
  const Labels4D labels =
      build_4d_labels(index, args.frame_id, args.cfg.m, args.cfg.fusion, args.cfg.grid,
                      file_provider(index_path.parent_path(), &dropped), semantic);
  if (dropped > 0) std::cerr << "dropped " << dropped << " non-finite point(s)\n";
  ensure_parent(args.out_path);
  write_occg(labels.occupancy, labels.semantics ? &*labels.semantics : nullptr, args.out_path);
  echo_config(args.out_path, args.cfg,
              json{{"command", "labels4d"}, {"frame", args.frame_id}, {"semantic", semantic}});
  std::cout << "wrote " << args.out_path << " (" << labels.occupancy.frames.size()
            << " timestep(s))\n";
  return 0;
}

int cmd_fuse(const PipelineArgs& args) {
  const fs::path index_path(args.index_path);
  const FrameIndex index = load_index(index_path);
  const FrameSet set = select_frames(index, args.frame_id, args.cfg.fusion);
  std::size_t dropped = 0;
  const CloudProvider provider = file_provider(index_path.parent_path(), &dropped);
  CloudMap clouds;
  for (const FrameRecord& member : set.members) clouds.emplace(member.frame_id, provider(member));
  const PointCloud fused = args.cfg.fusion.dynamic_aware
                               ? fuse_dynamic_aware(set, clouds, args.cfg.fusion)
                               : fuse_static(set, clouds, args.cfg.fusion);
  if (dropped > 0) std::cerr << "dropped " << dropped << " non-finite point(s)\n";
  ensure_parent(args.out_path);
  write_cloud(fused, args.out_path);
  echo_config(args.out_path, args.cfg,
              json{{"command", "fuse"},
                   {"frame", args.frame_id},
                   {"fused_points", fused.points.size()},
                   {"member_frames", set.members.size()}});
  std::cout << "wrote " << args.out_path << " (" << fused.points.size() << " points from "
            << set.members.size() << " frame(s))\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"occupancy-grid label generation and evaluation toolkit"};
  app.require_subcommand(1);

  PipelineArgs pipeline;
  bool semantic = false;

  auto add_pipeline_options = [&pipeline](CLI::App* sub, bool with_grid) {
    sub->add_option("--index", pipeline.index_path, "Frame index JSON")->required();
    sub->add_option("--frame", pipeline.frame_id, "Reference keyframe id")->required();
    sub->add_option("--config", pipeline.config_path, "Pipeline config JSON");
    sub->add_option("--out", pipeline.out_path, "Output path")->required();
    sub->add_option("--threads", pipeline.cfg.threads, "Thread cap (0 = hardware)");
    add_fusion_flags(sub, pipeline.cfg);
    if (with_grid) {
      sub->add_option("--m", pipeline.cfg.m, "Timesteps in the label sequence");
      add_grid_flags(sub, pipeline.cfg);
    }
  };

  CLI::App* labels4d = app.add_subcommand("labels4d", "Fuse frames and write 4D occupancy labels");
  add_pipeline_options(labels4d, true);
  labels4d->add_flag("--semantic", semantic, "Also vote per-voxel classes (needs point labels)");

  CLI::App* fuse = app.add_subcommand("fuse", "Fuse frames and dump the merged cloud");
  add_pipeline_options(fuse, false);

  // eval-loss
  std::string pred_path, gt_path;
  PipelineConfig loss_cfg = default_config();
  std::string mode_name;
  CLI::App* eval_loss = app.add_subcommand("eval-loss", "Focal loss of predicted probabilities");
  eval_loss->add_option("--pred", pred_path, "Probability tensor file")->required();
  eval_loss->add_option("--gt", gt_path, "OCCG label file")->required();
  eval_loss->add_option("--alpha", loss_cfg.loss.alpha, "Positive/negative weighting factor");
  eval_loss->add_option("--gamma", loss_cfg.loss.gamma, "Easy/hard weighting factor");
  eval_loss->add_option("--clamp-eps", loss_cfg.loss.clamp_eps, "Probability clamp");
  eval_loss->add_option("--mode", mode_name, "standard|literal");
  eval_loss->add_option("--threads", loss_cfg.threads, "Thread cap (0 = hardware)");

  // eval-metrics
  std::string metrics_pred, metrics_gt, metrics_out;
  bool metrics_semantic = false;
  std::uint32_t metrics_classes = 17;
  int metrics_threads = 0;
  CLI::App* eval_metrics = app.add_subcommand("eval-metrics", "Occupancy/semantic metrics report");
  eval_metrics->add_option("--pred", metrics_pred, "Predicted OCCG file")->required();
  eval_metrics->add_option("--gt", metrics_gt, "Ground-truth OCCG file")->required();
  eval_metrics->add_flag("--semantic", metrics_semantic, "Also score the semantic payloads");
  eval_metrics->add_option("--classes", metrics_classes, "Semantic class count");
  eval_metrics->add_option("--out", metrics_out, "Also write the JSON report here");
  eval_metrics->add_option("--threads", metrics_threads, "Thread cap (0 = hardware)");

  // train-toy
  ToyConfig toy;
  std::string toy_out;
  CLI::App* train = app.add_subcommand("train-toy", "Train the toy decoder on a synthetic scene");
  train->add_option("--seed", toy.seed, "Scene and init seed");
  train->add_option("--iters", toy.iters, "Gradient-descent iterations");
  train->add_option("--lr", toy.lr, "Learning rate");
  train->add_option("--m", toy.timesteps, "Timesteps");
  train->add_option("--out", toy_out, "Output directory")->required();

  // split
  std::string split_index, split_out;
  double split_fraction = 1.0;
  std::uint64_t split_seed = 0;
  CLI::App* split = app.add_subcommand("split", "Deterministic scene-level subset of an index");
  split->add_option("--index", split_index, "Frame index JSON")->required();
  split->add_option("--fraction", split_fraction, "Fraction of scenes in (0,1]")->required();
  split->add_option("--seed", split_seed, "Subset seed");
  split->add_option("--out", split_out, "Output index path")->required();

  // inspect
  std::string inspect_path;
  CLI::App* inspect = app.add_subcommand("inspect", "Dump an OCCG or cloud file header");
  inspect->add_option("file", inspect_path, "File to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (labels4d->parsed() || fuse->parsed()) {
      pipeline.resolve(labels4d->parsed() ? *labels4d : *fuse);
      return labels4d->parsed() ? cmd_labels4d(pipeline, semantic) : cmd_fuse(pipeline);
    }

    if (eval_loss->parsed()) {
      if (!mode_name.empty()) loss_cfg.loss.mode = focal_mode_from_string(mode_name);
      set_thread_count(loss_cfg.threads);
      const OccgFile gt = read_occg(gt_path);
      const PredictionGrid pred = read_probs(pred_path, gt.occupancy.spec);
      const double loss = focal_loss(pred, gt.occupancy, loss_cfg.loss);
      std::cout.precision(17);
      std::cout << loss << '\n';
      return 0;
    }

    if (eval_metrics->parsed()) {
      set_thread_count(metrics_threads);
      const OccgFile pred = read_occg(metrics_pred);
      const OccgFile gt = read_occg(metrics_gt);
      const std::vector<double> per_t = temporal_iou(pred.occupancy, gt.occupancy);

      json report;
      report["grid"] = grid_to_json(gt.occupancy.spec);
      report["timesteps"] = gt.occupancy.frames.size();
      report["binary_iou"] = pooled_binary_iou(pred.occupancy, gt.occupancy);
      report["per_timestep_iou"] = per_t;
      json voxels;
      voxels["per_frame"] = gt.occupancy.spec.voxel_count();
      json occ_pred = json::array(), occ_gt = json::array();
      for (std::size_t t = 0; t < gt.occupancy.frames.size(); ++t) {
        occ_pred.push_back(pred.occupancy.frames[t].popcount());
        occ_gt.push_back(gt.occupancy.frames[t].popcount());
      }
      voxels["occupied_pred"] = std::move(occ_pred);
      voxels["occupied_gt"] = std::move(occ_gt);
      report["voxels"] = std::move(voxels);

      if (metrics_semantic) {
        if (!pred.semantics || !gt.semantics) {
          throw ValidationError("--semantic needs semantic payloads in both files");
        }
        ConfusionMatrix merged;
        merged.k = metrics_classes;
        merged.counts.assign(static_cast<std::size_t>(metrics_classes) * (metrics_classes + 1), 0);
        for (std::size_t t = 0; t < gt.semantics->size(); ++t) {
          const ConfusionMatrix cm =
              confusion((*pred.semantics)[t], (*gt.semantics)[t], metrics_classes);
          for (std::size_t i = 0; i < cm.counts.size(); ++i) merged.counts[i] += cm.counts[i];
          merged.ignored += cm.ignored;
        }
        const std::vector<ClassIou> per_class = per_class_iou(merged);
        json jclasses = json::array();
        for (std::size_t c = 0; c < per_class.size(); ++c) {
          json jc{{"class", c}, {"present", per_class[c].present}};
          if (per_class[c].present) jc["iou"] = per_class[c].iou;
          if (metrics_classes == kOccupancyChallengeClassNames.size()) {
            jc["name"] = kOccupancyChallengeClassNames[c];
          }
          jclasses.push_back(std::move(jc));
        }
        json semantic_report{{"classes", metrics_classes},
                             {"per_class", std::move(jclasses)},
                             {"ignored", merged.ignored},
                             {"evaluated", merged.total()}};
        semantic_report["miou"] = miou(per_class);
        report["semantic"] = std::move(semantic_report);
      }

      const std::string text = report.dump(2);
      std::cout << text << '\n';
      if (!metrics_out.empty()) {
        ensure_parent(metrics_out);
        write_text(metrics_out, text);
      }
      return 0;
    }

    if (train->parsed()) {
      const fs::path out_dir(toy_out);
      fs::create_directories(out_dir);
      const ToyScene scene = make_toy_scene(toy);
      const TrainResult result = train_toy(scene, toy);

      std::string csv = "iteration,loss\n";
      for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
        char line[64];
        std::snprintf(line, sizeof line, "%zu,%.17g\n", i, result.loss_history[i]);
        csv += line;
      }
      write_text(out_dir / "history.csv", csv.substr(0, csv.size() - 1));

      OccupancyGrid4D thresholded;
      thresholded.spec = scene.target.spec;
      const std::size_t n = scene.target.spec.voxel_count();
      for (std::uint32_t t = 0; t < result.prediction.timesteps; ++t) {
        OccupancyGrid frame(scene.target.spec);
        for (std::size_t i = 0; i < n; ++i) {
          if (result.prediction.probs[static_cast<std::size_t>(t) * n + i] > 0.5) frame.set(i);
        }
        thresholded.frames.push_back(std::move(frame));
      }
      write_occg(thresholded, nullptr, out_dir / "prediction.occg");
      write_occg(scene.target, nullptr, out_dir / "target.occg");
      write_probs(result.prediction, out_dir / "probs.f32");

      json provenance{{"command", "train-toy"},
                      {"seed", toy.seed},
                      {"iters", toy.iters},
                      {"lr", toy.lr},
                      {"timesteps", toy.timesteps},
                      {"dims", {{"z", toy.depth}, {"y", toy.height}, {"x", toy.width}}},
                      {"loss", loss_to_json(toy.loss)},
                      {"initial_loss", result.loss_history.front()},
                      {"final_loss", result.loss_history.back()}};
      std::vector<double> ious = temporal_iou(thresholded, scene.target);
      provenance["iou"] = ious;
      write_text(out_dir / "config.json", provenance.dump(2));

      std::cout << "final loss " << result.loss_history.back() << ", occupancy IoU ";
      for (std::size_t t = 0; t < ious.size(); ++t) std::cout << (t > 0 ? "," : "") << ious[t];
      std::cout << '\n';
      return 0;
    }

    if (split->parsed()) {
      const FrameIndex index = load_index(split_index);
      const FrameIndex subset = sample_subset(index, split_fraction, split_seed);
      ensure_parent(split_out);
      write_index(subset, split_out);
      json j{{"command", "split"},
             {"fraction", split_fraction},
             {"seed", split_seed},
             {"input_scenes", index.scenes.size()},
             {"output_scenes", subset.scenes.size()}};
      fs::path sidecar(split_out);
      sidecar += ".config.json";
      write_text(sidecar, j.dump(2));
      std::cout << "wrote " << split_out << " (" << subset.scenes.size() << " of "
                << index.scenes.size() << " scenes)\n";
      return 0;
    }

    if (inspect->parsed()) {
      std::ifstream probe(inspect_path, std::ios::binary);
      if (!probe) throw IoError("cannot open: " + inspect_path);
      char magic[4] = {};
      probe.read(magic, 4);
      probe.close();
      if (std::string_view(magic, 4) == "OCCG") {
        const OccgFile file = read_occg(inspect_path);
        const GridSpec& s = file.occupancy.spec;
        std::cout << "OCCG v" << kOccgVersion << "  timesteps=" << file.occupancy.frames.size()
                  << "  dims(z,y,x)=" << s.nz << "x" << s.ny << "x" << s.nx << "  voxel(z,y,x)="
                  << s.voxel_z << "x" << s.voxel_y << "x" << s.voxel_x << " m  origin(x,y,z)=("
                  << s.origin.x << "," << s.origin.y << "," << s.origin.z << ")\n";
        const double n = static_cast<double>(s.voxel_count());
        for (std::size_t t = 0; t < file.occupancy.frames.size(); ++t) {
          const std::size_t occupied = file.occupancy.frames[t].popcount();
          std::cout << "  t=" << t << "  occupied=" << occupied << " ("
                    << 100.0 * static_cast<double>(occupied) / n << "%)\n";
        }
        std::cout << "  semantic payload: " << (file.semantics ? "yes" : "no") << '\n';
      } else {
        const CloudLoadResult loaded = load_cloud(inspect_path);
        std::cout << "point cloud  records=" << loaded.cloud.size() + loaded.dropped_nonfinite
                  << "  finite=" << loaded.cloud.size() << "  dropped=" << loaded.dropped_nonfinite
                  << "  labels=" << (loaded.cloud.labels ? "yes" : "no") << '\n';
        if (!loaded.cloud.points.empty()) {
          Point3 lo = loaded.cloud.points.front(), hi = lo;
          for (const Point3& p : loaded.cloud.points) {
            lo.x = std::min(lo.x, p.x);
            lo.y = std::min(lo.y, p.y);
            lo.z = std::min(lo.z, p.z);
            hi.x = std::max(hi.x, p.x);
            hi.y = std::max(hi.y, p.y);
            hi.z = std::max(hi.z, p.z);
          }
          std::cout << "  bounds x[" << lo.x << "," << hi.x << "] y[" << lo.y << "," << hi.y
                    << "] z[" << lo.z << "," << hi.z << "]\n";
        }
      }
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("occkit");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& s : full) argv.push_back(s.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace occkit::cli
