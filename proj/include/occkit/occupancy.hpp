// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "occkit/geometry.hpp"

namespace occkit {

struct PointCloud;

// Regular grid geometry. `origin` is the min corner in the reference ego
// frame; cells are half-open: cell k along an axis covers
// [origin + k*v, origin + (k+1)*v). Axis order in storage is (z, y, x) with
// nz/ny/nx cells of size voxel_z/voxel_y/voxel_x meters.
struct GridSpec {
  Point3 origin;
  double voxel_z = 1.0;
  double voxel_y = 1.0;
  double voxel_x = 1.0;
  std::uint32_t nz = 1;
  std::uint32_t ny = 1;
  std::uint32_t nx = 1;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(nz) * ny * nx;
  }
  std::size_t linear(std::uint32_t z, std::uint32_t y, std::uint32_t x) const {
    return (static_cast<std::size_t>(z) * ny + y) * nx + x;
  }
  bool operator==(const GridSpec&) const = default;

  // Throws ValidationError on non-positive voxel sizes, zero dims, or more
  // than 2^31 voxels.
  void validate() const;
};

// Dense binary grid, one bit per voxel, linear index (z*ny + y)*nx + x,
// LSB-first within each 64-bit word.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }

  bool test(std::size_t linear) const {
    return (words_[linear >> 6] >> (linear & 63)) & 1u;
  }
  bool test(std::uint32_t z, std::uint32_t y, std::uint32_t x) const {
    return test(spec_.linear(z, y, x));
  }
  void set(std::size_t linear) { words_[linear >> 6] |= std::uint64_t{1} << (linear & 63); }
  void set(std::uint32_t z, std::uint32_t y, std::uint32_t x) { set(spec_.linear(z, y, x)); }

  std::size_t popcount() const;

  const std::vector<std::uint64_t>& words() const { return words_; }
  std::vector<std::uint64_t>& words() { return words_; }

  bool operator==(const OccupancyGrid&) const = default;

 private:
  GridSpec spec_;
  std::vector<std::uint64_t> words_;
};

// Temporal sequence of occupancy grids sharing one GridSpec, each frame in
// its own keyframe's ego coordinates.
struct OccupancyGrid4D {
  GridSpec spec;
  std::vector<OccupancyGrid> frames;

  std::size_t timesteps() const { return frames.size(); }
  bool operator==(const OccupancyGrid4D&) const = default;
};

// Per-voxel class ids; 255 = empty or unlabeled.
struct SemanticGrid {
  GridSpec spec;
  std::vector<std::uint8_t> classes;

  bool operator==(const SemanticGrid&) const = default;
};

inline constexpr std::uint8_t kUnlabeled = 255;

// Sets voxel (z,y,x) iff some point lands in its half-open cell,
// i.e. floor((p - origin)/voxel) == (z,y,x) componentwise. Out-of-range
// points (including ones exactly on the grid's upper boundary) are dropped.
// Parallel over points; bits are set with atomic OR, so the result is
// bit-identical for any schedule or thread count.
OccupancyGrid voxelize(const PointCloud& cloud, const GridSpec& spec);

// Majority class per occupied voxel, ignoring label 255; ties go to the
// smallest class id; voxels holding only 255-labeled points stay 255.
// Requires the cloud to carry labels.
SemanticGrid voxelize_semantic(const PointCloud& cloud, const GridSpec& spec);

// -------------------------------------------------------------------------
// OCCG container, little-endian throughout:
//   bytes  0..3   magic "OCCG"
//   bytes  4..7   version u32 = 1
//   bytes  8..11  flags u32, bit 0 = semantic payload present
//   bytes 12..27  m, D, H, W as u32 (timesteps, nz, ny, nx)
//   bytes 28..39  voxel sizes v_Z, v_H, v_W as f32
//   bytes 40..51  origin z, y, x as f32
//   occupancy payload: ceil(m*D*H*W / 8) bytes, bit index
//     ((t*D + z)*H + y)*W + x, LSB-first within each byte, zero padded
//   semantic payload (iff flags bit 0): m*D*H*W class-id bytes, same order.
//
// Geometry fields are stored at single precision; read(write(g)) is
// bit-exact whenever the in-memory spec holds f32-representable values
// (loading from any occkit-written file guarantees that).
// -------------------------------------------------------------------------

inline constexpr std::uint32_t kOccgVersion = 1;

// Nearest f32 value of v, as a double. Out of line with a forced store:
// gcc 11's -O3 vectorizer has been seen eliding inline narrowing casts.
double to_f32(double v);

void write_occg(const OccupancyGrid4D& grid, const std::vector<SemanticGrid>* semantics,
                const std::filesystem::path& path);

struct OccgFile {
  OccupancyGrid4D occupancy;
  std::optional<std::vector<SemanticGrid>> semantics;
};

// Throws BadMagicError / VersionMismatchError / PayloadLengthError.
OccgFile read_occg(const std::filesystem::path& path);

}  // namespace occkit
