// Copyright 2026 The seqlidar Authors
// SPDX-License-Identifier: Apache-2.0
//
// Readers and writers for KITTI-convention files: object labels,
// calibration, velodyne binaries, and pose lists.

#ifndef SEQLIDAR_KITTI_IO_HPP
#define SEQLIDAR_KITTI_IO_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqlidar/datamodel.hpp"
#include "seqlidar/errors.hpp"
#include "seqlidar/geometry.hpp"

namespace seqlidar::kitti {

using geometry::Transform;
using geometry::Vec3;

/// One KITTI object label. Dimensions are ordered height/width/length and
/// the location is the bottom-face center in reference-camera coordinates.
struct KittiLabel {
  std::string type;
  double truncated = 0.0;
  int occluded = -1;
  double alpha = 0.0;
  double bbox_left = 0.0, bbox_top = 0.0, bbox_right = 0.0, bbox_bottom = 0.0;
  double height = 0.0, width = 0.0, length = 0.0;
  Vec3 location = Vec3::Zero();
  double rotation_y = 0.0;
  std::optional<double> score;
};

namespace detail {

inline void validate_label(const KittiLabel& l) {
  if (l.type != "DontCare" &&
      (!(l.height > 0.0) || !(l.width > 0.0) || !(l.length > 0.0))) {
    throw InvariantViolation("label dimensions must be positive");
  }
  if (l.bbox_left > l.bbox_right || l.bbox_top > l.bbox_bottom) {
    throw InvariantViolation("2D box must satisfy left <= right, top <= bottom");
  }
  if (l.rotation_y < -geometry::kPi || l.rotation_y >= geometry::kPi) {
    throw InvariantViolation("rotation_y must lie in [-pi, pi)");
  }
}

inline double parse_real(std::string_view tok) {
  const auto v = seqlidar::detail::parse_double(tok);
  if (!v) throw NumericParseError("bad numeric field: " + std::string(tok));
  return *v;
}

}  // namespace detail

/// Parses one label line: 15 fields for ground truth, 16 with a trailing
/// score for predictions. rotation_y is canonicalized into [-pi, pi) so that
/// boundary values written at %.6f precision reparse cleanly.
inline KittiLabel parse_label_line(std::string_view line) {
  const auto tok = seqlidar::detail::split_whitespace(line);
  if (tok.size() != 15 && tok.size() != 16) {
    throw FieldCountError(seqlidar::detail::strprintf(
        "label line has %zu fields, expected 15 or 16", tok.size()));
  }
  KittiLabel l;
  l.type = std::string(tok[0]);
  l.truncated = detail::parse_real(tok[1]);
  const auto occ = seqlidar::detail::parse_int(tok[2]);
  if (!occ) {
    throw NumericParseError("bad occluded field: " + std::string(tok[2]));
  }
  l.occluded = static_cast<int>(*occ);
  l.alpha = detail::parse_real(tok[3]);
  l.bbox_left = detail::parse_real(tok[4]);
  l.bbox_top = detail::parse_real(tok[5]);
  l.bbox_right = detail::parse_real(tok[6]);
  l.bbox_bottom = detail::parse_real(tok[7]);
  l.height = detail::parse_real(tok[8]);
  l.width = detail::parse_real(tok[9]);
  l.length = detail::parse_real(tok[10]);
  l.location = Vec3(detail::parse_real(tok[11]), detail::parse_real(tok[12]),
                    detail::parse_real(tok[13]));
  l.rotation_y = geometry::wrap_heading(detail::parse_real(tok[14]));
  if (tok.size() == 16) {
    l.score = detail::parse_real(tok[15]);
  }
  detail::validate_label(l);
  return l;
}

/// Precision contract: %.2f for the 2D box, %.6f for everything else.
inline std::string serialize_label_line(const KittiLabel& l) {
  detail::validate_label(l);
  std::string line = l.type;
  line += seqlidar::detail::strprintf(
      " %.6f %d %.6f %.2f %.2f %.2f %.2f %.6f %.6f %.6f %.6f %.6f %.6f %.6f",
      l.truncated, l.occluded, l.alpha, l.bbox_left, l.bbox_top, l.bbox_right,
      l.bbox_bottom, l.height, l.width, l.length, l.location.x(),
      l.location.y(), l.location.z(), l.rotation_y);
  if (l.score) line += seqlidar::detail::strprintf(" %.6f", *l.score);
  return line;
}

inline std::vector<KittiLabel> read_label_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open " + path.string());
  std::vector<KittiLabel> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    labels.push_back(parse_label_line(line));
  }
  return labels;
}

inline void write_label_file(std::span<const KittiLabel> labels,
                             const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const KittiLabel& l : labels) {
    out << serialize_label_line(l) << '\n';
  }
  if (!out) throw IoError("short write on " + path.string());
}

// ---------------------------------------------------------------------------
// Velodyne binaries
// ---------------------------------------------------------------------------

/// KITTI velodyne container; same wire format as the native point blob.
/// stride 5 carries the rel_time channel of accumulated clouds.
inline PointCloud read_velodyne(const std::filesystem::path& path, int stride = 4) {
  return read_point_blob(path, stride);
}

inline void write_velodyne(const PointCloud& pc, const std::filesystem::path& path) {
  write_point_blob(pc, path);
}

// ---------------------------------------------------------------------------
// Calibration files
// ---------------------------------------------------------------------------
//
// Layout: `P0:`..`P3:` (12 reals each; the front-camera projection is
// written to every slot, and consumers read P2), `R0_rect:` (9 reals),
// `Tr_velo_to_cam:` (12 reals, top 3 rows of t_ref), and an `image_size:`
// line (width height) so the full calibration round-trips. Values are
// written at 17 significant digits; files without image_size default to
// 1920x1280.

inline constexpr int kDefaultImageWidth = 1920;
inline constexpr int kDefaultImageHeight = 1280;

inline void write_calib(const CalibrationSet& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  auto write_row_major = [&out](const char* key, const double* v, int n) {
    out << key << ':';
    for (int i = 0; i < n; ++i) {
      out << seqlidar::detail::strprintf(" %.16e", v[i]);
    }
    out << '\n';
  };
  Eigen::Matrix<double, 3, 4, Eigen::RowMajor> p = c.p_img().matrix();
  for (const char* key : {"P0", "P1", "P2", "P3"}) {
    write_row_major(key, p.data(), 12);
  }
  const Eigen::Matrix<double, 3, 3, Eigen::RowMajor> r =
      c.r_rect().matrix().topLeftCorner<3, 3>();
  write_row_major("R0_rect", r.data(), 9);
  const Eigen::Matrix<double, 3, 4, Eigen::RowMajor> tr =
      c.t_ref().matrix().topRows<3>();
  write_row_major("Tr_velo_to_cam", tr.data(), 12);
  out << "image_size: " << c.image_width() << ' ' << c.image_height() << '\n';
  if (!out) throw IoError("short write on " + path.string());
}

inline CalibrationSet read_calib(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open " + path.string());
  std::map<std::string, std::vector<double>> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tok = seqlidar::detail::split_whitespace(line);
    if (tok.empty()) continue;
    if (tok[0].empty() || tok[0].back() != ':') {
      throw MalformedCalib("bad calib line: " + line);
    }
    std::vector<double> values;
    for (std::size_t i = 1; i < tok.size(); ++i) {
      const auto v = seqlidar::detail::parse_double(tok[i]);
      if (!v) throw MalformedCalib("bad calib value: " + std::string(tok[i]));
      values.push_back(*v);
    }
    entries[std::string(tok[0].substr(0, tok[0].size() - 1))] = std::move(values);
  }
  auto require = [&entries](const char* key, std::size_t n) -> const std::vector<double>& {
    auto it = entries.find(key);
    if (it == entries.end()) {
      throw MalformedCalib(std::string("calib file missing ") + key);
    }
    if (it->second.size() != n) {
      throw MalformedCalib(seqlidar::detail::strprintf(
          "calib key %s has %zu values, expected %zu", key, it->second.size(), n));
    }
    return it->second;
  };

  const auto& p2 = require("P2", 12);
  Eigen::Matrix<double, 3, 4> p;
  for (int i = 0; i < 12; ++i) p(i / 4, i % 4) = p2[static_cast<std::size_t>(i)];

  const auto& r0 = require("R0_rect", 9);
  geometry::Mat4 r_rect = geometry::Mat4::Identity();
  for (int i = 0; i < 9; ++i) r_rect(i / 3, i % 3) = r0[static_cast<std::size_t>(i)];

  const auto& tr = require("Tr_velo_to_cam", 12);
  geometry::Mat4 t_ref = geometry::Mat4::Identity();
  for (int i = 0; i < 12; ++i) t_ref(i / 4, i % 4) = tr[static_cast<std::size_t>(i)];

  int width = kDefaultImageWidth;
  int height = kDefaultImageHeight;
  if (auto it = entries.find("image_size"); it != entries.end()) {
    if (it->second.size() != 2 || it->second[0] <= 0 || it->second[1] <= 0) {
      throw MalformedCalib("bad image_size entry");
    }
    width = static_cast<int>(it->second[0]);
    height = static_cast<int>(it->second[1]);
  }

  try {
    return CalibrationSet(geometry::ProjectionMatrix(p),
                          Transform::from_matrix(t_ref), width, height,
                          Transform::from_matrix(r_rect));
  } catch (const NonRigidTransform& e) {
    throw MalformedCalib(e.what());
  } catch (const NonFiniteInput& e) {
    throw MalformedCalib(e.what());
  }
}

// ---------------------------------------------------------------------------
// Pose files
// ---------------------------------------------------------------------------

/// One line per frame: 12 reals at %.12e, the top 3 rows of the 4x4
/// SDC-to-global pose, row-major.
inline void write_poses(const Sequence& seq, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const geometry::Mat4& m = seq[i].pose.matrix();
    for (int k = 0; k < 12; ++k) {
      out << seqlidar::detail::strprintf(k == 0 ? "%.12e" : " %.12e", m(k / 4, k % 4));
    }
    out << '\n';
  }
  if (!out) throw IoError("short write on " + path.string());
}

inline std::vector<Transform> read_poses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open " + path.string());
  std::vector<Transform> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tok = seqlidar::detail::split_whitespace(line);
    if (tok.size() != 12) {
      throw MalformedPose(seqlidar::detail::strprintf(
          "pose line %zu has %zu fields, expected 12", line_no, tok.size()));
    }
    geometry::Mat4 m = geometry::Mat4::Identity();
    for (int k = 0; k < 12; ++k) {
      const auto v = seqlidar::detail::parse_double(tok[static_cast<std::size_t>(k)]);
      if (!v) {
        throw MalformedPose(seqlidar::detail::strprintf(
            "pose line %zu: bad value '%s'", line_no, std::string(tok[static_cast<std::size_t>(k)]).c_str()));
      }
      m(k / 4, k % 4) = *v;
    }
    try {
      poses.push_back(Transform::from_matrix(m));
    } catch (const NonRigidTransform& e) {
      throw NonRigidPose(seqlidar::detail::strprintf("pose line %zu: %s", line_no, e.what()));
    }
  }
  return poses;
}

}  // namespace seqlidar::kitti

#endif  // SEQLIDAR_KITTI_IO_HPP
