// Copyright 2026 The seqlidar Authors
// SPDX-License-Identifier: Apache-2.0
//
// Rotated-box detection metrics: BEV/3D IoU, greedy score-ordered matching,
// and 101-point interpolated AP with its heading-weighted variant APH.

#ifndef SEQLIDAR_EVAL_HPP
#define SEQLIDAR_EVAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "seqlidar/datamodel.hpp"
#include "seqlidar/errors.hpp"
#include "seqlidar/geometry.hpp"

namespace seqlidar::eval {

namespace detail {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

/// BEV footprint corners, counter-clockwise.
inline std::array<Vec2, 4> bev_corners(const Box3D& b) {
  const double c = std::cos(b.heading());
  const double s = std::sin(b.heading());
  const double hl = b.length() / 2.0;
  const double hw = b.width() / 2.0;
  std::array<Vec2, 4> out;
  const std::array<std::array<double, 2>, 4> local = {
      {{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  for (int i = 0; i < 4; ++i) {
    out[i] = {b.center().x() + c * local[i][0] - s * local[i][1],
              b.center().y() + s * local[i][0] + c * local[i][1]};
  }
  return out;
}

/// Shoelace area of a counter-clockwise polygon.
inline double polygon_area(std::span<const Vec2> poly) {
  if (poly.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    acc += a.x * b.y - a.y * b.x;
  }
  return acc / 2.0;
}

/// Sutherland-Hodgman clip of a convex CCW subject polygon against one CCW
/// convex clip polygon. Boundary points count as inside, so clipping a
/// polygon against itself returns it vertex-for-vertex.
template <std::size_t N>
inline std::size_t clip_convex(const std::array<Vec2, N>& subject,
                               std::size_t n_subject,
                               const std::array<Vec2, 4>& clip,
                               std::array<Vec2, N>& out) {
  std::array<Vec2, N> cur = subject;
  std::size_t n = n_subject;
  for (int e = 0; e < 4; ++e) {
    const Vec2& c0 = clip[e];
    const Vec2& c1 = clip[(e + 1) % 4];
    const Vec2 edge{c1.x - c0.x, c1.y - c0.y};
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& s = cur[i];
      const Vec2& t = cur[(i + 1) % n];
      const double ds = cross(edge, Vec2{s.x - c0.x, s.y - c0.y});
      const double dt = cross(edge, Vec2{t.x - c0.x, t.y - c0.y});
      if (ds >= 0.0) out[m++] = s;
      if ((ds >= 0.0) != (dt >= 0.0)) {
        const double a = ds / (ds - dt);
        out[m++] = {s.x + a * (t.x - s.x), s.y + a * (t.y - s.y)};
      }
    }
    cur = out;
    n = m;
    if (n == 0) break;
  }
  out = cur;
  return n;
}

/// Intersection area of two boxes' BEV footprints.
inline double bev_intersection_area(const Box3D& a, const Box3D& b) {
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  // A 4-gon clipped by 4 half-planes has at most 8 vertices.
  std::array<Vec2, 16> subject{};
  std::copy(ca.begin(), ca.end(), subject.begin());
  std::array<Vec2, 16> clipped{};
  const std::size_t n = clip_convex(subject, 4, cb, clipped);
  if (n < 3) return 0.0;
  const double area = polygon_area(std::span<const Vec2>(clipped.data(), n));
  return area > 0.0 ? area : 0.0;
}

}  // namespace detail

/// Intersection-over-union of the heading-rotated rectangles in the x-y
/// plane. Identical boxes give exactly 1: the clipped polygon is the subject
/// polygon itself, so the same shoelace evaluation cancels in the ratio.
inline double bev_iou(const Box3D& a, const Box3D& b) {
  const auto ca = detail::bev_corners(a);
  const auto cb = detail::bev_corners(b);
  const double area_a = detail::polygon_area(std::span<const detail::Vec2>(ca));
  const double area_b = detail::polygon_area(std::span<const detail::Vec2>(cb));
  const double inter = detail::bev_intersection_area(a, b);
  const double uni = area_a + area_b - inter;
  if (!(uni > 0.0)) return 0.0;
  const double iou = inter / uni;
  return iou < 0.0 ? 0.0 : (iou > 1.0 ? 1.0 : iou);
}

/// 3D IoU for boxes with headings about z: BEV intersection times the
/// z-interval overlap, over the union of volumes.
inline double iou_3d(const Box3D& a, const Box3D& b) {
  const auto ca = detail::bev_corners(a);
  const auto cb = detail::bev_corners(b);
  const double za_lo = a.center().z() - a.height() / 2.0;
  const double za_hi = a.center().z() + a.height() / 2.0;
  const double zb_lo = b.center().z() - b.height() / 2.0;
  const double zb_hi = b.center().z() + b.height() / 2.0;
  const double vol_a = detail::polygon_area(std::span<const detail::Vec2>(ca)) * (za_hi - za_lo);
  const double vol_b = detail::polygon_area(std::span<const detail::Vec2>(cb)) * (zb_hi - zb_lo);
  const double dz = std::min(za_hi, zb_hi) - std::max(za_lo, zb_lo);
  if (dz <= 0.0) return 0.0;
  const double inter = detail::bev_intersection_area(a, b) * dz;
  const double uni = vol_a + vol_b - inter;
  if (!(uni > 0.0)) return 0.0;
  const double iou = inter / uni;
  return iou < 0.0 ? 0.0 : (iou > 1.0 ? 1.0 : iou);
}

using IouFn = double (*)(const Box3D&, const Box3D&);

struct MatchPair {
  std::size_t prediction_index = 0;
  std::size_t gt_index = 0;
  double iou = 0.0;
};

/// Outcome of matching one frame's predictions against its ground truth.
/// Every prediction and every ground truth appears exactly once across the
/// three fields.
struct MatchResult {
  std::vector<MatchPair> pairs;  ///< in score (processing) order
  std::vector<std::size_t> unmatched_predictions;
  std::vector<std::size_t> unmatched_gts;
};

/// Greedy matcher: predictions are processed in descending score order (ties
/// by input order) and each claims the unclaimed same-class ground truth
/// with the highest IoU at or above the threshold; IoU ties resolve to the
/// lowest ground-truth index.
inline MatchResult match_detections(const DetectionSet& preds,
                                    std::span<const Box3D> gts, IouFn iou_fn,
                                    double threshold) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&preds](std::size_t a, std::size_t b) {
    return *preds.boxes()[a].score() > *preds.boxes()[b].score();
  });

  MatchResult result;
  std::vector<bool> claimed(gts.size(), false);
  std::vector<bool> matched_pred(preds.size(), false);
  for (std::size_t pi : order) {
    const Box3D& pred = preds.boxes()[pi];
    double best_iou = 0.0;
    std::size_t best_gt = gts.size();
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (claimed[gi] || gts[gi].object_class() != pred.object_class()) continue;
      const double iou = iou_fn(pred, gts[gi]);
      if (iou >= threshold && iou > best_iou) {
        best_iou = iou;
        best_gt = gi;
      }
    }
    if (best_gt < gts.size()) {
      claimed[best_gt] = true;
      matched_pred[pi] = true;
      result.pairs.push_back({pi, best_gt, best_iou});
    }
  }
  for (std::size_t pi = 0; pi < preds.size(); ++pi) {
    if (!matched_pred[pi]) result.unmatched_predictions.push_back(pi);
  }
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    if (!claimed[gi]) result.unmatched_gts.push_back(gi);
  }
  return result;
}

/// One matched-or-not prediction feeding the PR sweep. heading_weight is
/// max(0, 1 - |wrapped heading error| / pi) for true positives and 0 for
/// false positives.
struct ScoredDetection {
  double score = 0.0;
  bool is_tp = false;
  double heading_weight = 0.0;
};

inline double heading_weight(double pred_heading, double gt_heading) {
  const double d = std::abs(geometry::wrap_heading(pred_heading - gt_heading));
  const double w = 1.0 - d / geometry::kPi;
  return w > 0.0 ? w : 0.0;
}

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
  double heading_weight_sum = 0.0;  ///< cumulative TP heading weight
};

struct PRCurve {
  std::vector<PRPoint> points;  ///< recall non-decreasing (score cutoffs high to low)
};

struct ApAph {
  double ap = 0.0;
  double aph = 0.0;
};

/// PR points at every score cutoff, highest first. Point k covers the k+1
/// highest-scored detections.
inline PRCurve pr_curve(std::vector<ScoredDetection> dets, std::size_t num_gt) {
  if (num_gt == 0) {
    throw EmptyGroundTruth("AP is undefined with no ground-truth boxes");
  }
  std::stable_sort(dets.begin(), dets.end(),
                   [](const ScoredDetection& a, const ScoredDetection& b) {
                     return a.score > b.score;
                   });
  PRCurve curve;
  curve.points.reserve(dets.size());
  double tp = 0.0;
  double weight = 0.0;
  for (std::size_t k = 0; k < dets.size(); ++k) {
    if (dets[k].is_tp) {
      tp += 1.0;
      weight += dets[k].heading_weight;
    }
    curve.points.push_back({tp / static_cast<double>(num_gt),
                            tp / static_cast<double>(k + 1), weight});
  }
  return curve;
}

/// 101-point interpolated average precision with the precision envelope
/// (max precision at recall >= r). APH reuses the sweep with every true
/// positive contributing its heading weight to both the precision and the
/// recall numerator, so APH <= AP always holds.
inline ApAph average_precision(std::vector<ScoredDetection> dets, std::size_t num_gt) {
  const PRCurve curve = pr_curve(std::move(dets), num_gt);
  const std::size_t n = curve.points.size();
  std::vector<double> recall(n), precision(n), recall_h(n), precision_h(n);
  for (std::size_t k = 0; k < n; ++k) {
    recall[k] = curve.points[k].recall;
    precision[k] = curve.points[k].precision;
    recall_h[k] = curve.points[k].heading_weight_sum / static_cast<double>(num_gt);
    precision_h[k] = curve.points[k].heading_weight_sum / static_cast<double>(k + 1);
  }
  auto interpolated = [n](const std::vector<double>& rec,
                          const std::vector<double>& prec) {
    double total = 0.0;
    for (int j = 0; j <= 100; ++j) {
      const double r = static_cast<double>(j) / 100.0;
      double best = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (rec[k] >= r && prec[k] > best) best = prec[k];
      }
      total += best;
    }
    return total / 101.0;
  };
  return {interpolated(recall, precision), interpolated(recall_h, precision_h)};
}

// ---------------------------------------------------------------------------
// Whole-dataset evaluation
// ---------------------------------------------------------------------------

enum class Difficulty { L1, L2 };

struct EvalConfig {
  std::map<ObjectClass, double> iou_thresholds = {
      {ObjectClass::Vehicle, 0.7},
      {ObjectClass::Pedestrian, 0.5},
      {ObjectClass::Cyclist, 0.5},
  };
  IouFn iou_fn = &bev_iou;
  Difficulty difficulty = Difficulty::L2;
  /// L2 includes the easy boxes too (cumulative) unless cleared, in which
  /// case only boxes at or below the point threshold count.
  bool l2_cumulative = true;
  /// Ground truth with num_points at or below this is in the hard bucket;
  /// boxes without a num_points attribute count in every bucket.
  std::int64_t l2_max_points = 5;
};

struct FrameDetections {
  DetectionSet predictions;
  std::vector<Box3D> ground_truth;
};

struct ClassResult {
  double ap = std::numeric_limits<double>::quiet_NaN();
  double aph = std::numeric_limits<double>::quiet_NaN();
  std::size_t num_gt = 0;
  std::size_t num_predictions = 0;
};

struct EvalResult {
  std::map<ObjectClass, ClassResult> per_class;
  double mean_ap = std::numeric_limits<double>::quiet_NaN();
  double mean_aph = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline bool gt_in_bucket(const Box3D& gt, const EvalConfig& cfg) {
  if (!gt.num_points()) return true;
  const bool hard = *gt.num_points() <= cfg.l2_max_points;
  if (cfg.difficulty == Difficulty::L1) return !hard;
  return cfg.l2_cumulative || hard;
}

}  // namespace detail

/// Per-class AP/APH over a set of frames, plus the unweighted mean over the
/// classes that have ground truth. The difficulty filter drops ground-truth
/// boxes before matching; matching runs per frame and the PR sweep merges
/// all frames' detections by score.
inline EvalResult evaluate(std::span<const FrameDetections> frames,
                           const EvalConfig& cfg = {}) {
  EvalResult result;
  double ap_sum = 0.0, aph_sum = 0.0;
  std::size_t n_scored = 0;
  for (const auto& [cls, threshold] : cfg.iou_thresholds) {
    ClassResult cr;
    std::vector<ScoredDetection> dets;
    for (const FrameDetections& frame : frames) {
      std::vector<Box3D> preds_c;
      for (const Box3D& b : frame.predictions.boxes()) {
        if (b.object_class() == cls) preds_c.push_back(b);
      }
      std::vector<Box3D> gts_c;
      for (const Box3D& b : frame.ground_truth) {
        if (b.object_class() == cls && detail::gt_in_bucket(b, cfg)) {
          gts_c.push_back(b);
        }
      }
      cr.num_gt += gts_c.size();
      cr.num_predictions += preds_c.size();
      const DetectionSet pred_set(preds_c);
      const MatchResult matches =
          match_detections(pred_set, gts_c, cfg.iou_fn, threshold);
      std::vector<ScoredDetection> frame_dets(preds_c.size());
      for (std::size_t i = 0; i < preds_c.size(); ++i) {
        frame_dets[i] = {*preds_c[i].score(), false, 0.0};
      }
      for (const MatchPair& p : matches.pairs) {
        frame_dets[p.prediction_index].is_tp = true;
        frame_dets[p.prediction_index].heading_weight = heading_weight(
            preds_c[p.prediction_index].heading(), gts_c[p.gt_index].heading());
      }
      dets.insert(dets.end(), frame_dets.begin(), frame_dets.end());
    }
    if (cr.num_gt > 0) {
      const ApAph scores = average_precision(std::move(dets), cr.num_gt);
      cr.ap = scores.ap;
      cr.aph = scores.aph;
      ap_sum += cr.ap;
      aph_sum += cr.aph;
      ++n_scored;
    }
    result.per_class[cls] = cr;
  }
  if (n_scored > 0) {
    result.mean_ap = ap_sum / static_cast<double>(n_scored);
    result.mean_aph = aph_sum / static_cast<double>(n_scored);
  }
  return result;
}

}  // namespace seqlidar::eval

#endif  // SEQLIDAR_EVAL_HPP
