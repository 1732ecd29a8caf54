// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#include "occkit/metrics.hpp"

#include <bit>
#include <numeric>

#include "occkit/errors.hpp"

namespace occkit {

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

double binary_iou(const OccupancyGrid& pred, const OccupancyGrid& gt) {
  if (pred.spec() != gt.spec()) throw ValidationError("binary_iou: grid specs differ");
  const std::uint64_t* a = pred.words().data();
  const std::uint64_t* b = gt.words().data();
  std::int64_t tp = 0, fp = 0, fn = 0;
#pragma omp parallel for schedule(static) reduction(+ : tp, fp, fn)
  for (std::int64_t w = 0; w < static_cast<std::int64_t>(pred.words().size()); ++w) {
    tp += std::popcount(a[w] & b[w]);
    fp += std::popcount(a[w] & ~b[w]);
    fn += std::popcount(~a[w] & b[w]);
  }
  const std::int64_t denom = tp + fp + fn;
  if (denom == 0) return 1.0;  // both grids empty
  return static_cast<double>(tp) / static_cast<double>(denom);
}

ConfusionMatrix confusion(const SemanticGrid& pred, const SemanticGrid& gt, std::uint32_t k) {
  if (pred.spec != gt.spec) throw ValidationError("confusion: grid specs differ");
  if (k == 0 || k >= kUnlabeled) throw ValidationError("confusion: class count out of range");
  const std::size_t n = gt.classes.size();

  int bad = 0;
#pragma omp parallel for schedule(static) reduction(max : bad)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const std::uint8_t g = gt.classes[static_cast<std::size_t>(i)];
    const std::uint8_t p = pred.classes[static_cast<std::size_t>(i)];
    if (g != kUnlabeled && (g >= k || (p != kUnlabeled && p >= k))) bad = 1;
  }
  if (bad != 0) throw ValidationError("confusion: class id >= k");

  ConfusionMatrix cm;
  cm.k = k;
  cm.counts.assign(static_cast<std::size_t>(k) * (k + 1), 0);
  std::int64_t ignored = 0;

  // Per-thread partial matrices merged by addition; integer counts make the
  // result identical for any schedule.
#pragma omp parallel reduction(+ : ignored)
  {
    std::vector<std::int64_t> local(cm.counts.size(), 0);
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      const std::uint8_t g = gt.classes[static_cast<std::size_t>(i)];
      if (g == kUnlabeled) {
        ++ignored;
        continue;
      }
      const std::uint8_t p = pred.classes[static_cast<std::size_t>(i)];
      const std::uint32_t col = p == kUnlabeled ? k : p;
      ++local[static_cast<std::size_t>(g) * (k + 1) + col];
    }
#pragma omp critical
    {
      for (std::size_t j = 0; j < local.size(); ++j) cm.counts[j] += local[j];
    }
  }
  cm.ignored = ignored;
  return cm;
}

std::vector<ClassIou> per_class_iou(const ConfusionMatrix& cm) {
  std::vector<ClassIou> out(cm.k);
  for (std::uint32_t c = 0; c < cm.k; ++c) {
    std::int64_t row = 0, col = 0;
    for (std::uint32_t j = 0; j <= cm.k; ++j) row += cm.at(c, j);
    for (std::uint32_t i = 0; i < cm.k; ++i) col += cm.at(i, c);
    const std::int64_t denom = row + col - cm.at(c, c);
    if (denom > 0) {
      out[c].present = true;
      out[c].iou = static_cast<double>(cm.at(c, c)) / static_cast<double>(denom);
    }
  }
  return out;
}

double miou(const std::vector<ClassIou>& per_class) {
  double sum = 0.0;
  std::size_t present = 0;
  for (const ClassIou& c : per_class) {
    if (!c.present) continue;
    sum += c.iou;
    ++present;
  }
  if (present == 0) throw ValidationError("miou: every class is absent");
  return sum / static_cast<double>(present);
}

std::vector<double> temporal_iou(const OccupancyGrid4D& pred, const OccupancyGrid4D& gt) {
  if (pred.spec != gt.spec || pred.frames.size() != gt.frames.size()) {
    throw ValidationError("temporal_iou: sequence shapes differ");
  }
  std::vector<double> out;
  out.reserve(pred.frames.size());
  for (std::size_t t = 0; t < pred.frames.size(); ++t) {
    out.push_back(binary_iou(pred.frames[t], gt.frames[t]));
  }
  return out;
}

}  // namespace occkit
