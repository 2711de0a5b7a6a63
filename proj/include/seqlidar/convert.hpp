// Copyright 2026 The seqlidar Authors
// SPDX-License-Identifier: Apache-2.0
//
// Semantic conversion between the native convention (boxes in SDC
// coordinates, heading 0 facing +x, dims ordered length/width/height) and
// the KITTI convention (boxes in reference-camera coordinates, rotation
// about the camera y-axis with 0 facing the SDC's right, dims ordered
// height/width/length).

#ifndef SEQLIDAR_CONVERT_HPP
#define SEQLIDAR_CONVERT_HPP

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "seqlidar/datamodel.hpp"
#include "seqlidar/errors.hpp"
#include "seqlidar/geometry.hpp"
#include "seqlidar/kitti_io.hpp"

namespace seqlidar::convert {

using geometry::Transform;
using geometry::Vec3;

// -- class names -------------------------------------------------------------

inline std::string class_to_kitti_type(ObjectClass c) {
  switch (c) {
    case ObjectClass::Vehicle:
      return "Car";
    case ObjectClass::Pedestrian:
      return "Pedestrian";
    case ObjectClass::Cyclist:
      return "Cyclist";
  }
  throw UnknownClass("unhandled object class");
}

inline ObjectClass kitti_type_to_class(std::string_view type) {
  if (type == "Car") return ObjectClass::Vehicle;
  if (type == "Pedestrian") return ObjectClass::Pedestrian;
  if (type == "Cyclist") return ObjectClass::Cyclist;
  throw UnknownClass("no class mapping for KITTI type: " + std::string(type));
}

// -- camera index remap -------------------------------------------------------

/// Native-to-KITTI camera index remap. The front camera is 0 natively and 2
/// in KITTI; the remaining native indices fill the remaining KITTI slots in
/// ascending order, keeping the map bijective over {0..4}.
inline int remap_camera_index(int idx_native) {
  static constexpr std::array<int, 5> kMap = {2, 0, 1, 3, 4};
  if (idx_native < 0 || idx_native >= static_cast<int>(kMap.size())) {
    throw UnknownCamera("unknown native camera index " + std::to_string(idx_native));
  }
  return kMap[static_cast<std::size_t>(idx_native)];
}

// -- canonical virtual reference camera --------------------------------------

/// Rotation of the canonical forward-looking reference camera: camera x is
/// the SDC's -y (right), camera y is -z (down), camera z is +x (forward).
inline Transform canonical_t_ref() {
  geometry::Mat3 r;
  r << 0, -1, 0,
       0, 0, -1,
       1, 0, 0;
  return Transform::from_parts(r, Vec3::Zero());
}

inline constexpr double kDefaultFocalLength = 2000.0;

/// Default calibration when the source data supplies none: canonical
/// extrinsic, identity rectification, centered pinhole projection.
inline CalibrationSet canonical_calibration(
    double focal = kDefaultFocalLength,
    int image_width = kitti::kDefaultImageWidth,
    int image_height = kitti::kDefaultImageHeight) {
  return CalibrationSet(
      geometry::ProjectionMatrix::pinhole(focal, image_width / 2.0, image_height / 2.0),
      canonical_t_ref(), image_width, image_height);
}

// -- box corner projection ----------------------------------------------------

struct Bbox2D {
  double left = 0.0, top = 0.0, right = 0.0, bottom = 0.0;
};

/// Written when no corner projects in front of the camera; distinguishable
/// from any clipped real box.
inline constexpr Bbox2D kInvisibleBbox = {-1.0, -1.0, -1.0, -1.0};

struct BoxProjection {
  Bbox2D bbox;
  int n_visible = 0;  ///< corners with positive camera depth
};

/// The 8 box corners in SDC coordinates.
inline std::array<Vec3, 8> box_corners(const Box3D& box) {
  const double c = std::cos(box.heading());
  const double s = std::sin(box.heading());
  const double hl = box.length() / 2.0;
  const double hw = box.width() / 2.0;
  const double hh = box.height() / 2.0;
  std::array<Vec3, 8> out;
  int k = 0;
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      for (double sz : {-1.0, 1.0}) {
        const double lx = sx * hl;
        const double ly = sy * hw;
        out[k++] = box.center() + Vec3(c * lx - s * ly, s * lx + c * ly, sz * hh);
      }
    }
  }
  return out;
}

/// Projects the corners through the calibration chain, takes the
/// axis-aligned hull of the corners with positive depth, and clips it to the
/// image. With no visible corner the sentinel bbox is returned.
inline BoxProjection project_box_corners(const Box3D& box, const CalibrationSet& calib) {
  const Transform cam_from_sdc = calib.r_rect() * calib.t_ref();
  const auto& p = calib.p_img().matrix();
  BoxProjection out;
  double min_u = 0, max_u = 0, min_v = 0, max_v = 0;
  for (const Vec3& corner : box_corners(box)) {
    const Vec3 cam = cam_from_sdc.apply(corner);
    if (cam.z() <= 0.0) continue;
    const Eigen::Vector3d y = p * cam.homogeneous();
    const double u = y.x() / y.z();
    const double v = y.y() / y.z();
    if (out.n_visible == 0) {
      min_u = max_u = u;
      min_v = max_v = v;
    } else {
      min_u = std::min(min_u, u);
      max_u = std::max(max_u, u);
      min_v = std::min(min_v, v);
      max_v = std::max(max_v, v);
    }
    ++out.n_visible;
  }
  if (out.n_visible == 0) {
    out.bbox = kInvisibleBbox;
    return out;
  }
  const double w = static_cast<double>(calib.image_width());
  const double h = static_cast<double>(calib.image_height());
  auto clamp = [](double v, double lo, double hi) {
    return v < lo ? lo : (v > hi ? hi : v);
  };
  out.bbox = {clamp(min_u, 0.0, w), clamp(min_v, 0.0, h), clamp(max_u, 0.0, w),
              clamp(max_v, 0.0, h)};
  return out;
}

// -- box conversion -----------------------------------------------------------

/// Converts a native box to a KITTI label.
///
/// The label location is the bottom-face center expressed in the reference
/// camera frame, dims are reordered to (h, w, l), and rotation_y is the
/// angle of the heading direction about the camera y-axis with 0 at the
/// camera's +x. For the canonical extrinsic this reduces to
/// rotation_y = -heading - pi/2. truncated/occluded are unknown in the
/// source data and written as 0 / -1.
inline kitti::KittiLabel box_to_kitti(const Box3D& box, const CalibrationSet& calib) {
  kitti::KittiLabel l;
  l.type = class_to_kitti_type(box.object_class());
  l.truncated = 0.0;
  l.occluded = -1;
  l.height = box.height();
  l.width = box.width();
  l.length = box.length();

  const Vec3 bottom_center = box.center() - Vec3(0.0, 0.0, box.height() / 2.0);
  l.location = calib.t_ref().apply(bottom_center);

  const Vec3 dir = calib.t_ref().rotation() *
                   Vec3(std::cos(box.heading()), std::sin(box.heading()), 0.0);
  l.rotation_y = geometry::wrap_heading(-std::atan2(dir.z(), dir.x()));
  l.alpha = geometry::wrap_heading(
      l.rotation_y - std::atan2(l.location.x(), l.location.z()));

  const BoxProjection proj = project_box_corners(box, calib);
  l.bbox_left = proj.bbox.left;
  l.bbox_top = proj.bbox.top;
  l.bbox_right = proj.bbox.right;
  l.bbox_bottom = proj.bbox.bottom;

  l.score = box.score();
  return l;
}

/// Inverse of box_to_kitti on its image: recovers center, dims, and heading;
/// alpha and the 2D box are derived quantities and are discarded.
inline Box3D kitti_to_box(const kitti::KittiLabel& label, const CalibrationSet& calib) {
  const ObjectClass cls = kitti_type_to_class(label.type);
  const Vec3 bottom_center = calib.t_ref().inverse().apply(label.location);
  const Vec3 center = bottom_center + Vec3(0.0, 0.0, label.height / 2.0);

  const double a = -label.rotation_y;
  const Vec3 dir_cam(std::cos(a), 0.0, std::sin(a));
  const Vec3 dir = calib.t_ref().rotation().transpose() * dir_cam;
  const double heading = geometry::wrap_heading(std::atan2(dir.y(), dir.x()));

  return Box3D(center, label.length, label.width, label.height, heading, cls,
               label.score);
}

}  // namespace seqlidar::convert

#endif  // SEQLIDAR_CONVERT_HPP
