// Copyright 2026 The seqlidar Authors
// SPDX-License-Identifier: Apache-2.0
//
// Ego-motion-compensated multi-frame accumulation with a relative-timestamp
// channel, plus range cropping and voxelization.

#ifndef SEQLIDAR_TEMPORAL_HPP
#define SEQLIDAR_TEMPORAL_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "seqlidar/datamodel.hpp"
#include "seqlidar/errors.hpp"
#include "seqlidar/geometry.hpp"

namespace seqlidar::temporal {

/// Axis-aligned crop volume; closed on all six faces.
struct Range3D {
  Range3D(double x_min, double x_max, double y_min, double y_max, double z_min,
          double z_max)
      : x_min(x_min), x_max(x_max), y_min(y_min), y_max(y_max), z_min(z_min),
        z_max(z_max) {
    if (!(x_min < x_max) || !(y_min < y_max) || !(z_min < z_max)) {
      throw InvariantViolation("range minima must be strictly below maxima");
    }
  }

  bool contains(double x, double y, double z) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max &&
           z >= z_min && z <= z_max;
  }

  double x_min, x_max, y_min, y_max, z_min, z_max;
};

/// Default crop volume for full-scene processing.
inline Range3D default_range() {
  return Range3D(-102.4, 102.4, -102.4, 102.4, -10.0, 15.0);
}

struct AccumulationConfig {
  std::size_t n_prev = 3;            ///< frames before the anchor
  std::optional<Range3D> range;      ///< crop applied after transformation
};

struct VoxelGridConfig {
  std::array<double, 3> voxel_size = {0.1, 0.1, 0.1};
  std::size_t max_points_per_voxel = 10;
  std::size_t max_voxels = 160000;
};

inline PointCloud crop_range(const PointCloud& pc, const Range3D& range);

/// Concatenates frames max(0, anchor - n_prev) .. anchor into the anchor
/// frame's coordinates via pose[anchor]^-1 * pose[i], oldest first. Every
/// point gains rel_time = timestamp_i - timestamp_anchor, which is exactly 0
/// for anchor points and strictly negative otherwise. Anchor points are
/// copied untransformed. The optional crop runs after transformation.
inline PointCloud accumulate(const Sequence& seq, std::size_t anchor_idx,
                             const AccumulationConfig& cfg = {}) {
  if (anchor_idx >= seq.size()) {
    throw IndexOutOfRange(detail::strprintf(
        "anchor index %zu out of range for %zu frames", anchor_idx, seq.size()));
  }
  const std::size_t start =
      anchor_idx >= cfg.n_prev ? anchor_idx - cfg.n_prev : 0;
  std::size_t total = 0;
  for (std::size_t i = start; i <= anchor_idx; ++i) {
    total += seq[i].cloud.size();
  }
  PointCloud out(true);
  out.reserve(total);

  const geometry::Transform anchor_inv = seq[anchor_idx].pose.inverse();
  const double anchor_ts = seq[anchor_idx].timestamp;

  for (std::size_t i = start; i <= anchor_idx; ++i) {
    const PointCloud& pc = seq[i].cloud;
    const double rel = seq[i].timestamp - anchor_ts;
    const auto xs = pc.x();
    const auto ys = pc.y();
    const auto zs = pc.z();
    const auto in = pc.intensity();
    if (i == anchor_idx) {
      for (std::size_t k = 0; k < pc.size(); ++k) {
        out.add(xs[k], ys[k], zs[k], in[k], 0.0);
      }
      continue;
    }
    const geometry::Transform t = anchor_inv * seq[i].pose;
    const geometry::Mat3 r = t.rotation();
    const geometry::Vec3 p = t.translation_part();
    const double r00 = r(0, 0), r01 = r(0, 1), r02 = r(0, 2);
    const double r10 = r(1, 0), r11 = r(1, 1), r12 = r(1, 2);
    const double r20 = r(2, 0), r21 = r(2, 1), r22 = r(2, 2);
    for (std::size_t k = 0; k < pc.size(); ++k) {
      const double x = xs[k], y = ys[k], z = zs[k];
      out.add(r00 * x + r01 * y + r02 * z + p.x(),
              r10 * x + r11 * y + r12 * z + p.y(),
              r20 * x + r21 * y + r22 * z + p.z(), in[k], rel);
    }
  }
  if (cfg.range) {
    return crop_range(out, *cfg.range);
  }
  return out;
}

/// Order-preserving filter keeping points inside the closed range.
inline PointCloud crop_range(const PointCloud& pc, const Range3D& range) {
  PointCloud out(pc.has_rel_time());
  const auto xs = pc.x();
  const auto ys = pc.y();
  const auto zs = pc.z();
  const auto in = pc.intensity();
  for (std::size_t k = 0; k < pc.size(); ++k) {
    if (!range.contains(xs[k], ys[k], zs[k])) continue;
    if (pc.has_rel_time()) {
      out.add(xs[k], ys[k], zs[k], in[k], pc.rel_time()[k]);
    } else {
      out.add(xs[k], ys[k], zs[k], in[k]);
    }
  }
  return out;
}

/// One occupied grid cell: integer index and the indices of its points in
/// the source cloud, in input order, truncated to the per-voxel cap.
struct Voxel {
  std::array<std::int32_t, 3> index;
  std::vector<std::uint32_t> point_indices;
};

/// Assigns each in-range point to cell floor((p - range_min) / voxel_size).
/// Voxels appear in first-occurrence order, capped at max_voxels; points
/// beyond max_points_per_voxel in a cell are dropped. Points whose index
/// falls outside the grid (including points exactly on the max faces) are
/// skipped.
inline std::vector<Voxel> voxelize(const PointCloud& pc, const VoxelGridConfig& cfg,
                                   const Range3D& range) {
  if (!(cfg.voxel_size[0] > 0.0) || !(cfg.voxel_size[1] > 0.0) ||
      !(cfg.voxel_size[2] > 0.0)) {
    throw InvariantViolation("voxel sizes must be positive");
  }
  const std::array<double, 3> lo = {range.x_min, range.y_min, range.z_min};
  const std::array<double, 3> hi = {range.x_max, range.y_max, range.z_max};
  std::array<std::int64_t, 3> dims;
  for (int d = 0; d < 3; ++d) {
    dims[d] = static_cast<std::int64_t>(
        std::ceil((hi[d] - lo[d]) / cfg.voxel_size[d] - 1e-9));
    if (dims[d] < 1) dims[d] = 1;
  }

  std::vector<Voxel> voxels;
  std::unordered_map<std::int64_t, std::size_t> slot_of;
  const auto xs = pc.x();
  const auto ys = pc.y();
  const auto zs = pc.z();
  for (std::size_t k = 0; k < pc.size(); ++k) {
    const double coords[3] = {xs[k], ys[k], zs[k]};
    std::int64_t idx[3];
    bool in_grid = true;
    for (int d = 0; d < 3; ++d) {
      const double cell = std::floor((coords[d] - lo[d]) / cfg.voxel_size[d]);
      if (cell < 0.0 || cell >= static_cast<double>(dims[d])) {
        in_grid = false;
        break;
      }
      idx[d] = static_cast<std::int64_t>(cell);
    }
    if (!in_grid) continue;
    const std::int64_t key = (idx[0] * dims[1] + idx[1]) * dims[2] + idx[2];
    auto it = slot_of.find(key);
    if (it == slot_of.end()) {
      if (voxels.size() >= cfg.max_voxels) continue;
      it = slot_of.emplace(key, voxels.size()).first;
      voxels.push_back(Voxel{{static_cast<std::int32_t>(idx[0]),
                              static_cast<std::int32_t>(idx[1]),
                              static_cast<std::int32_t>(idx[2])},
                             {}});
    }
    Voxel& v = voxels[it->second];
    if (v.point_indices.size() < cfg.max_points_per_voxel) {
      v.point_indices.push_back(static_cast<std::uint32_t>(k));
    }
  }
  return voxels;
}

}  // namespace seqlidar::temporal

#endif  // SEQLIDAR_TEMPORAL_HPP
