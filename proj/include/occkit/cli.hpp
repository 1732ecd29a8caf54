// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occkit/fusion.hpp"
#include "occkit/loss.hpp"
#include "occkit/occupancy.hpp"

namespace occkit::cli {

struct PipelineConfig {
  GridSpec grid;
  FusionConfig fusion;
  FocalLossParams loss;
  std::uint32_t m = 1;
  int threads = 0;  // 0 = hardware default
};

// Surrounding-view defaults: x,y in [-51.2, 51.2), z in [-5, 3), 0.4 m voxels.
PipelineConfig default_config();

PipelineConfig load_config(const std::string& path, const PipelineConfig& base);
std::string config_to_json_string(const PipelineConfig& cfg);

// Entry point behind the occkit binary. Returns the process exit code:
// 0 success, 1 validation/usage error, 2 I/O error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace occkit::cli
