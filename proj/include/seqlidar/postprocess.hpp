// Copyright 2026 The seqlidar Authors
// SPDX-License-Identifier: Apache-2.0
//
// Detection postprocessing: removal of boxes with no current-frame points,
// suppression of implausibly small boxes, per-class expert combination, and
// greedy NMS merging of same-class detection sets.

#ifndef SEQLIDAR_POSTPROCESS_HPP
#define SEQLIDAR_POSTPROCESS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "seqlidar/datamodel.hpp"
#include "seqlidar/errors.hpp"
#include "seqlidar/eval.hpp"

namespace seqlidar::postprocess {

/// Default minimum plausible dimension for vehicle boxes, meters.
inline constexpr double kDefaultMinDimension = 0.5;

/// Counts points inside the oriented box (closed faces: a point exactly on
/// a face is contained). With current_frame_only set, only points with
/// rel_time exactly 0 count, and the cloud must carry the channel.
inline std::size_t count_points_in_box(const Box3D& box, const PointCloud& pc,
                                       bool current_frame_only = false) {
  if (current_frame_only && !pc.has_rel_time()) {
    throw MissingTimestampChannel(
        "current-frame counting requires the rel_time channel");
  }
  const double c = std::cos(box.heading());
  const double s = std::sin(box.heading());
  const double hl = box.length() / 2.0;
  const double hw = box.width() / 2.0;
  const double hh = box.height() / 2.0;
  const auto xs = pc.x();
  const auto ys = pc.y();
  const auto zs = pc.z();
  std::size_t count = 0;
  for (std::size_t k = 0; k < pc.size(); ++k) {
    if (current_frame_only && pc.rel_time()[k] != 0.0) continue;
    const double dx = xs[k] - box.center().x();
    const double dy = ys[k] - box.center().y();
    const double dz = zs[k] - box.center().z();
    // Rotate by -heading into the box frame.
    const double u = c * dx + s * dy;
    const double v = -s * dx + c * dy;
    if (std::abs(u) <= hl && std::abs(v) <= hw && std::abs(dz) <= hh) {
      ++count;
    }
  }
  return count;
}

/// Keeps exactly the boxes containing at least one current-frame point.
inline DetectionSet remove_empty(const DetectionSet& dets, const PointCloud& pc) {
  if (!pc.has_rel_time()) {
    throw MissingTimestampChannel(
        "remove_empty requires an accumulated cloud with rel_time");
  }
  std::vector<Box3D> kept;
  for (const Box3D& b : dets.boxes()) {
    if (count_points_in_box(b, pc, /*current_frame_only=*/true) >= 1) {
      kept.push_back(b);
    }
  }
  return DetectionSet(std::move(kept), dets.class_filter());
}

/// Removes boxes whose length, width, AND height are all strictly below
/// min_dim; one dimension at or above the threshold keeps the box.
inline DetectionSet dimension_suppression(const DetectionSet& dets, double min_dim) {
  if (!(min_dim > 0.0)) {
    throw std::invalid_argument("min_dim must be positive");
  }
  std::vector<Box3D> kept;
  for (const Box3D& b : dets.boxes()) {
    const bool tiny =
        b.length() < min_dim && b.width() < min_dim && b.height() < min_dim;
    if (!tiny) kept.push_back(b);
  }
  return DetectionSet(std::move(kept), dets.class_filter());
}

/// Concatenates per-class expert outputs without any cross-class
/// suppression. The class filters must be pairwise distinct; the result
/// carries none.
inline DetectionSet combine_experts(std::span<const DetectionSet> sets) {
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      if (sets[i].class_filter() == sets[j].class_filter()) {
        throw DuplicateClassFilter(
            detail::strprintf("sets %zu and %zu share a class filter", i, j));
      }
    }
  }
  std::vector<Box3D> all;
  for (const DetectionSet& s : sets) {
    all.insert(all.end(), s.boxes().begin(), s.boxes().end());
  }
  return DetectionSet(std::move(all));
}

/// Merges same-class detection sets by greedy BEV NMS: concatenate, sort by
/// score descending (ties keep concatenation order), keep each box unless
/// its IoU with an already-kept box exceeds the threshold. Kept boxes appear
/// in score order.
inline DetectionSet nms_merge(std::span<const DetectionSet> sets, double iou_threshold) {
  if (!(iou_threshold > 0.0) || !(iou_threshold < 1.0)) {
    throw std::invalid_argument("iou_threshold must lie in (0, 1)");
  }
  std::vector<Box3D> all;
  std::optional<ObjectClass> cls;
  auto note_class = [&cls](ObjectClass c) {
    if (!cls) {
      cls = c;
    } else if (c != *cls) {
      throw MixedClasses("nms_merge requires a single class across all sets");
    }
  };
  for (const DetectionSet& s : sets) {
    if (s.class_filter()) note_class(*s.class_filter());
    for (const Box3D& b : s.boxes()) note_class(b.object_class());
    all.insert(all.end(), s.boxes().begin(), s.boxes().end());
  }
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&all](std::size_t a, std::size_t b) {
    return *all[a].score() > *all[b].score();
  });
  std::vector<Box3D> kept;
  for (std::size_t i : order) {
    bool suppressed = false;
    for (const Box3D& k : kept) {
      if (eval::bev_iou(all[i], k) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(all[i]);
  }
  return DetectionSet(std::move(kept), cls);
}

}  // namespace seqlidar::postprocess

#endif  // SEQLIDAR_POSTPROCESS_HPP
