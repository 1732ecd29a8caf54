// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#include "occkit/occupancy.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <utility>

#include "occkit/dataset.hpp"
#include "occkit/errors.hpp"

namespace occkit {

void GridSpec::validate() const {
  if (!is_finite(origin)) throw ValidationError("grid origin has non-finite components");
  if (!(voxel_z > 0.0) || !(voxel_y > 0.0) || !(voxel_x > 0.0) || !std::isfinite(voxel_z) ||
      !std::isfinite(voxel_y) || !std::isfinite(voxel_x)) {
    throw ValidationError("voxel sizes must be positive and finite");
  }
  if (nz == 0 || ny == 0 || nx == 0) throw ValidationError("grid dims must be >= 1");
  const std::uint64_t count = static_cast<std::uint64_t>(nz) * ny * nx;
  if (count > (std::uint64_t{1} << 31)) {
    throw ValidationError("grid exceeds the 2^31 voxel limit");
  }
}

OccupancyGrid::OccupancyGrid(const GridSpec& spec) : spec_(spec) {
  spec.validate();
  words_.assign((spec.voxel_count() + 63) / 64, 0);
}

std::size_t OccupancyGrid::popcount() const {
  std::size_t total = 0;
  for (const std::uint64_t w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

namespace {

// Cell of a point under the half-open floor rule, or npos when outside.
inline std::size_t cell_of(const Point3& p, const GridSpec& spec) {
  const double cz = std::floor((p.z - spec.origin.z) / spec.voxel_z);
  const double cy = std::floor((p.y - spec.origin.y) / spec.voxel_y);
  const double cx = std::floor((p.x - spec.origin.x) / spec.voxel_x);
  // Comparisons are false for NaN, so non-finite points fall out here too.
  if (!(cz >= 0.0 && cz < spec.nz && cy >= 0.0 && cy < spec.ny && cx >= 0.0 && cx < spec.nx)) {
    return static_cast<std::size_t>(-1);
  }
  return (static_cast<std::size_t>(cz) * spec.ny + static_cast<std::size_t>(cy)) * spec.nx +
         static_cast<std::size_t>(cx);
}

// Above this many words per thread, private grids stop paying for themselves.
constexpr std::size_t kPrivateGridWords = std::size_t{1} << 22;
constexpr std::size_t kSerialCutover = 1u << 14;

}  // namespace

OccupancyGrid voxelize(const PointCloud& cloud, const GridSpec& spec) {
  spec.validate();
  OccupancyGrid grid(spec);
  std::uint64_t* words = grid.words().data();
  const std::size_t nwords = grid.words().size();
  const Point3* pts = cloud.points.data();
  const std::int64_t npts = static_cast<std::int64_t>(cloud.points.size());

  if (static_cast<std::size_t>(npts) < kSerialCutover) {
    for (std::int64_t i = 0; i < npts; ++i) {
      const std::size_t lin = cell_of(pts[i], spec);
      if (lin != static_cast<std::size_t>(-1)) grid.set(lin);
    }
  } else if (nwords <= kPrivateGridWords) {
    // Bits only ever turn on, so merging per-thread grids with OR gives the
    // same result as any interleaving.
#pragma omp parallel
    {
      std::vector<std::uint64_t> local(nwords, 0);
#pragma omp for schedule(static) nowait
      for (std::int64_t i = 0; i < npts; ++i) {
        const std::size_t lin = cell_of(pts[i], spec);
        if (lin != static_cast<std::size_t>(-1)) {
          local[lin >> 6] |= std::uint64_t{1} << (lin & 63);
        }
      }
#pragma omp critical
      {
        for (std::size_t w = 0; w < nwords; ++w) words[w] |= local[w];
      }
    }
  } else {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < npts; ++i) {
      const std::size_t lin = cell_of(pts[i], spec);
      if (lin == static_cast<std::size_t>(-1)) continue;
      std::atomic_ref<std::uint64_t>(words[lin >> 6])
          .fetch_or(std::uint64_t{1} << (lin & 63), std::memory_order_relaxed);
    }
  }
  return grid;
}

SemanticGrid voxelize_semantic(const PointCloud& cloud, const GridSpec& spec) {
  spec.validate();
  cloud.validate();
  if (!cloud.labels) throw ValidationError("voxelize_semantic requires a cloud with per-point labels");

  std::vector<std::pair<std::uint32_t, std::uint8_t>> hits;
  hits.reserve(cloud.points.size());
  const double oz = spec.origin.z, oy = spec.origin.y, ox = spec.origin.x;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point3& p = cloud.points[i];
    const double cz = std::floor((p.z - oz) / spec.voxel_z);
    const double cy = std::floor((p.y - oy) / spec.voxel_y);
    const double cx = std::floor((p.x - ox) / spec.voxel_x);
    if (!(cz >= 0.0 && cz < spec.nz && cy >= 0.0 && cy < spec.ny && cx >= 0.0 && cx < spec.nx)) {
      continue;
    }
    const std::size_t lin = spec.linear(static_cast<std::uint32_t>(cz), static_cast<std::uint32_t>(cy),
                                        static_cast<std::uint32_t>(cx));
    hits.emplace_back(static_cast<std::uint32_t>(lin), (*cloud.labels)[i]);
  }
  // Sorting by (voxel, label) makes the vote independent of point order.
  std::sort(hits.begin(), hits.end());

  SemanticGrid grid{spec, std::vector<std::uint8_t>(spec.voxel_count(), kUnlabeled)};
  std::size_t i = 0;
  while (i < hits.size()) {
    const std::uint32_t voxel = hits[i].first;
    std::uint8_t best_label = kUnlabeled;
    std::size_t best_count = 0;
    while (i < hits.size() && hits[i].first == voxel) {
      const std::uint8_t label = hits[i].second;
      std::size_t run = 0;
      while (i < hits.size() && hits[i].first == voxel && hits[i].second == label) {
        ++run;
        ++i;
      }
      // Strict > keeps the smallest class id on ties (labels ascend within a voxel).
      if (label != kUnlabeled && run > best_count) {
        best_count = run;
        best_label = label;
      }
    }
    grid.classes[voxel] = best_label;
  }
  return grid;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, sizeof u);
  put_u32(out, u);
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const std::uint8_t* p) {
  const std::uint32_t u = get_u32(p);
  float f;
  std::memcpy(&f, &u, sizeof f);
  return f;
}

constexpr std::size_t kHeaderBytes = 52;
constexpr char kMagic[4] = {'O', 'C', 'C', 'G'};

}  // namespace

double to_f32(double v) {
  volatile float narrowed = static_cast<float>(v);
  return narrowed;
}

void write_occg(const OccupancyGrid4D& grid, const std::vector<SemanticGrid>* semantics,
                const std::filesystem::path& path) {
  grid.spec.validate();
  const std::size_t m = grid.frames.size();
  if (m == 0) throw ValidationError("occupancy sequence must hold at least one timestep");
  for (const OccupancyGrid& frame : grid.frames) {
    if (frame.spec() != grid.spec) throw ValidationError("all timesteps must share the sequence spec");
  }
  const std::size_t n = grid.spec.voxel_count();
  if (semantics != nullptr) {
    if (semantics->size() != m) {
      throw ValidationError("semantic payload must provide one grid per timestep");
    }
    for (const SemanticGrid& s : *semantics) {
      if (s.spec != grid.spec) throw ValidationError("semantic grids must share the sequence spec");
      if (s.classes.size() != n) throw ValidationError("semantic grid has wrong voxel count");
    }
  }

  std::vector<std::uint8_t> buf;
  buf.reserve(kHeaderBytes + (m * n + 7) / 8 + (semantics ? m * n : 0));
  buf.insert(buf.end(), kMagic, kMagic + 4);
  put_u32(buf, kOccgVersion);
  put_u32(buf, semantics != nullptr ? 1u : 0u);
  put_u32(buf, static_cast<std::uint32_t>(m));
  put_u32(buf, grid.spec.nz);
  put_u32(buf, grid.spec.ny);
  put_u32(buf, grid.spec.nx);
  put_f32(buf, static_cast<float>(grid.spec.voxel_z));
  put_f32(buf, static_cast<float>(grid.spec.voxel_y));
  put_f32(buf, static_cast<float>(grid.spec.voxel_x));
  put_f32(buf, static_cast<float>(grid.spec.origin.z));
  put_f32(buf, static_cast<float>(grid.spec.origin.y));
  put_f32(buf, static_cast<float>(grid.spec.origin.x));

  const std::size_t payload_start = buf.size();
  buf.resize(payload_start + (m * n + 7) / 8, 0);
  for (std::size_t t = 0; t < m; ++t) {
    const OccupancyGrid& frame = grid.frames[t];
    for (std::size_t i = 0; i < n; ++i) {
      if (frame.test(i)) {
        const std::size_t bit = t * n + i;
        buf[payload_start + (bit >> 3)] |= static_cast<std::uint8_t>(1u << (bit & 7));
      }
    }
  }
  if (semantics != nullptr) {
    for (const SemanticGrid& s : *semantics) {
      buf.insert(buf.end(), s.classes.begin(), s.classes.end());
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write: " + path.string());
}

OccgFile read_occg(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw BadMagicError(path.string() + ": not an OCCG file (bad magic)");
  }
  if (buf.size() < kHeaderBytes) {
    throw PayloadLengthError(path.string() + ": truncated header, " + std::to_string(buf.size()) +
                             " of " + std::to_string(kHeaderBytes) + " header bytes");
  }
  const std::uint32_t version = get_u32(buf.data() + 4);
  if (version != kOccgVersion) {
    throw VersionMismatchError(path.string() + ": OCCG version " + std::to_string(version) +
                               ", expected " + std::to_string(kOccgVersion));
  }
  const std::uint32_t flags = get_u32(buf.data() + 8);
  const bool has_semantics = (flags & 1u) != 0;
  const std::uint32_t m = get_u32(buf.data() + 12);

  GridSpec spec;
  spec.nz = get_u32(buf.data() + 16);
  spec.ny = get_u32(buf.data() + 20);
  spec.nx = get_u32(buf.data() + 24);
  spec.voxel_z = get_f32(buf.data() + 28);
  spec.voxel_y = get_f32(buf.data() + 32);
  spec.voxel_x = get_f32(buf.data() + 36);
  spec.origin.z = get_f32(buf.data() + 40);
  spec.origin.y = get_f32(buf.data() + 44);
  spec.origin.x = get_f32(buf.data() + 48);
  if (m == 0) throw ValidationError(path.string() + ": timestep count must be >= 1");
  spec.validate();

  const std::size_t n = spec.voxel_count();
  const std::size_t occ_bytes = (static_cast<std::size_t>(m) * n + 7) / 8;
  const std::size_t expected = kHeaderBytes + occ_bytes + (has_semantics ? m * n : 0);
  if (buf.size() != expected) {
    throw PayloadLengthError(path.string() + ": payload length mismatch, file has " +
                             std::to_string(buf.size()) + " bytes, header implies " +
                             std::to_string(expected));
  }

  OccgFile file;
  file.occupancy.spec = spec;
  file.occupancy.frames.reserve(m);
  const std::uint8_t* occ = buf.data() + kHeaderBytes;
  for (std::uint32_t t = 0; t < m; ++t) {
    OccupancyGrid frame(spec);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t bit = static_cast<std::size_t>(t) * n + i;
      if ((occ[bit >> 3] >> (bit & 7)) & 1u) frame.set(i);
    }
    file.occupancy.frames.push_back(std::move(frame));
  }
  if (has_semantics) {
    std::vector<SemanticGrid> sem;
    sem.reserve(m);
    const std::uint8_t* base = buf.data() + kHeaderBytes + occ_bytes;
    for (std::uint32_t t = 0; t < m; ++t) {
      sem.push_back(SemanticGrid{spec, std::vector<std::uint8_t>(base + static_cast<std::size_t>(t) * n,
                                                                 base + (static_cast<std::size_t>(t) + 1) * n)});
    }
    file.semantics = std::move(sem);
  }
  return file;
}

}  // namespace occkit
