// Copyright 2026 The seqlidar Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SEQLIDAR_DATAMODEL_HPP
#define SEQLIDAR_DATAMODEL_HPP

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seqlidar/errors.hpp"
#include "seqlidar/geometry.hpp"

namespace seqlidar {

using geometry::Vec3;

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "binary point blobs are little-endian; big-endian hosts are "
              "not supported");

inline std::string strprintf(const char* fmt, ...) {
  std::va_list args;
  va_start(args, fmt);
  char buf[256];
  const int n = std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return std::string(buf, buf + (n < 0 ? 0 : n));
}

inline std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

/// Strict full-token parse; rejects partial consumption and empty tokens.
inline std::optional<double> parse_double(std::string_view tok) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view tok) {
  std::int64_t v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Point clouds
// ---------------------------------------------------------------------------

/// Columnar point container: x/y/z/intensity plus an optional relative-time
/// channel. Whether the channel exists is fixed at construction. Points are
/// validated as they are added, so a constructed cloud always satisfies:
/// finite coordinates, intensity in [0, 1], rel_time <= 0.
class PointCloud {
 public:
  explicit PointCloud(bool with_rel_time = false)
      : has_rel_time_(with_rel_time) {}

  std::size_t size() const { return x_.size(); }
  bool empty() const { return x_.empty(); }
  bool has_rel_time() const { return has_rel_time_; }

  void reserve(std::size_t n) {
    x_.reserve(n);
    y_.reserve(n);
    z_.reserve(n);
    intensity_.reserve(n);
    if (has_rel_time_) rel_time_.reserve(n);
  }

  void add(double x, double y, double z, double intensity) {
    if (has_rel_time_) {
      throw InvariantViolation("cloud carries rel_time; use the 5-argument add");
    }
    check_point(x, y, z, intensity);
    push(x, y, z, intensity);
  }

  void add(double x, double y, double z, double intensity, double rel_time) {
    if (!has_rel_time_) {
      throw InvariantViolation("cloud has no rel_time channel");
    }
    check_point(x, y, z, intensity);
    if (!std::isfinite(rel_time) || rel_time > 0.0) {
      throw InvariantViolation(
          detail::strprintf("rel_time must be finite and <= 0, got %g", rel_time));
    }
    push(x, y, z, intensity);
    rel_time_.push_back(rel_time);
  }

  std::span<const double> x() const { return x_; }
  std::span<const double> y() const { return y_; }
  std::span<const double> z() const { return z_; }
  std::span<const double> intensity() const { return intensity_; }

  std::span<const double> rel_time() const {
    if (!has_rel_time_) {
      throw MissingTimestampChannel("cloud has no rel_time channel");
    }
    return rel_time_;
  }

  Vec3 point(std::size_t i) const { return Vec3(x_[i], y_[i], z_[i]); }

 private:
  static void check_point(double x, double y, double z, double intensity) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      throw InvariantViolation("point coordinates must be finite");
    }
    if (!std::isfinite(intensity) || intensity < 0.0 || intensity > 1.0) {
      throw InvariantViolation(
          detail::strprintf("intensity must be in [0, 1], got %g", intensity));
    }
  }

  void push(double x, double y, double z, double intensity) {
    x_.push_back(x);
    y_.push_back(y);
    z_.push_back(z);
    intensity_.push_back(intensity);
  }

  std::vector<double> x_, y_, z_, intensity_, rel_time_;
  bool has_rel_time_;
};

// ---------------------------------------------------------------------------
// Boxes
// ---------------------------------------------------------------------------

enum class ObjectClass { Vehicle, Pedestrian, Cyclist };

inline constexpr std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::Vehicle:
      return "Vehicle";
    case ObjectClass::Pedestrian:
      return "Pedestrian";
    case ObjectClass::Cyclist:
      return "Cyclist";
  }
  return "?";
}

inline ObjectClass object_class_from_string(std::string_view s) {
  if (s == "Vehicle") return ObjectClass::Vehicle;
  if (s == "Pedestrian") return ObjectClass::Pedestrian;
  if (s == "Cyclist") return ObjectClass::Cyclist;
  throw UnknownClass("unknown object class: " + std::string(s));
}

/// 7-DoF oriented box in SDC coordinates: volumetric center, dimensions
/// along the box axes (length along heading, width across, height up), and
/// heading about +z with 0 facing +x. Heading is canonicalized into
/// [-pi, pi) at construction; everything else is validated.
class Box3D {
 public:
  Box3D(const Vec3& center, double length, double width, double height,
        double heading, ObjectClass object_class,
        std::optional<double> score = std::nullopt,
        std::optional<std::int64_t> num_points = std::nullopt)
      : center_(center),
        length_(length),
        width_(width),
        height_(height),
        heading_(geometry::wrap_heading(heading)),
        object_class_(object_class),
        score_(score),
        num_points_(num_points) {
    if (!center.allFinite()) {
      throw InvariantViolation("box center must be finite");
    }
    if (!(length > 0.0) || !(width > 0.0) || !(height > 0.0) ||
        !std::isfinite(length) || !std::isfinite(width) || !std::isfinite(height)) {
      throw InvariantViolation("box dimensions must be positive and finite");
    }
    if (score && (!std::isfinite(*score) || *score < 0.0 || *score > 1.0)) {
      throw InvariantViolation(
          detail::strprintf("score must be in [0, 1], got %g", *score));
    }
    if (num_points && *num_points < 0) {
      throw InvariantViolation("num_points must be non-negative");
    }
  }

  const Vec3& center() const { return center_; }
  double length() const { return length_; }
  double width() const { return width_; }
  double height() const { return height_; }
  double heading() const { return heading_; }
  ObjectClass object_class() const { return object_class_; }
  std::optional<double> score() const { return score_; }
  std::optional<std::int64_t> num_points() const { return num_points_; }

 private:
  Vec3 center_;
  double length_, width_, height_;
  double heading_;
  ObjectClass object_class_;
  std::optional<double> score_;
  std::optional<std::int64_t> num_points_;
};

// ---------------------------------------------------------------------------
// Frames and sequences
// ---------------------------------------------------------------------------

/// One sensor frame: absolute timestamp, ego pose (SDC -> global), fused
/// cloud in SDC coordinates, and ground-truth boxes.
struct Frame {
  double timestamp = 0.0;
  geometry::Transform pose;
  PointCloud cloud;
  std::vector<Box3D> boxes;
};

/// Ordered frame list with strictly increasing timestamps. Frame clouds are
/// untimed; the rel_time channel only appears on accumulated clouds.
class Sequence {
 public:
  Sequence(std::string id, std::vector<Frame> frames)
      : id_(std::move(id)), frames_(std::move(frames)) {
    if (id_.empty()) {
      throw InvariantViolation("sequence id must be non-empty");
    }
    for (char c : id_) {
      if (std::isspace(static_cast<unsigned char>(c)) || !std::isprint(static_cast<unsigned char>(c))) {
        throw InvariantViolation("sequence id must not contain whitespace");
      }
    }
    for (std::size_t i = 0; i < frames_.size(); ++i) {
      if (!std::isfinite(frames_[i].timestamp)) {
        throw InvariantViolation(i, "timestamp must be finite");
      }
      if (frames_[i].cloud.has_rel_time()) {
        throw InvariantViolation(i, "frame cloud must not carry rel_time");
      }
      if (i > 0 && frames_[i].timestamp <= frames_[i - 1].timestamp) {
        throw NonMonotonicTimestamps(detail::strprintf(
            "frame %zu timestamp %.9f is not after frame %zu timestamp %.9f",
            i, frames_[i].timestamp, i - 1, frames_[i - 1].timestamp));
      }
    }
  }

  const std::string& id() const { return id_; }
  const std::vector<Frame>& frames() const { return frames_; }
  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const Frame& operator[](std::size_t i) const { return frames_[i]; }

 private:
  std::string id_;
  std::vector<Frame> frames_;
};

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

/// Camera calibration bundle: projection, rectification (identity by
/// default), and the SDC-to-reference-camera extrinsic, plus image bounds
/// for clipping projected boxes.
class CalibrationSet {
 public:
  CalibrationSet(geometry::ProjectionMatrix p_img, geometry::Transform t_ref,
                 int image_width, int image_height,
                 geometry::Transform r_rect = geometry::Transform())
      : p_img_(std::move(p_img)),
        r_rect_(r_rect),
        t_ref_(t_ref),
        image_width_(image_width),
        image_height_(image_height) {
    if (image_width <= 0 || image_height <= 0) {
      throw InvariantViolation("image dimensions must be positive");
    }
  }

  const geometry::ProjectionMatrix& p_img() const { return p_img_; }
  const geometry::Transform& r_rect() const { return r_rect_; }
  const geometry::Transform& t_ref() const { return t_ref_; }
  int image_width() const { return image_width_; }
  int image_height() const { return image_height_; }

 private:
  geometry::ProjectionMatrix p_img_;
  geometry::Transform r_rect_;
  geometry::Transform t_ref_;
  int image_width_;
  int image_height_;
};

// ---------------------------------------------------------------------------
// Detection sets
// ---------------------------------------------------------------------------

/// Scored boxes, optionally tagged with the single class an expert model
/// emits. Every box must carry a score; if the tag is set, every box must
/// match it.
class DetectionSet {
 public:
  DetectionSet() = default;

  explicit DetectionSet(std::vector<Box3D> boxes,
                        std::optional<ObjectClass> class_filter = std::nullopt)
      : boxes_(std::move(boxes)), class_filter_(class_filter) {
    for (std::size_t i = 0; i < boxes_.size(); ++i) {
      if (!boxes_[i].score()) {
        throw InvariantViolation(
            detail::strprintf("detection box %zu has no score", i));
      }
      if (class_filter_ && boxes_[i].object_class() != *class_filter_) {
        throw InvariantViolation(detail::strprintf(
            "detection box %zu does not match the class filter", i));
      }
    }
  }

  const std::vector<Box3D>& boxes() const { return boxes_; }
  std::optional<ObjectClass> class_filter() const { return class_filter_; }
  std::size_t size() const { return boxes_.size(); }
  bool empty() const { return boxes_.empty(); }

 private:
  std::vector<Box3D> boxes_;
  std::optional<ObjectClass> class_filter_;
};

// ---------------------------------------------------------------------------
// Binary point blobs (shared by the native format and KITTI velodyne files)
// ---------------------------------------------------------------------------

/// Reads a little-endian float32 blob with 4 floats per record
/// (x y z intensity) or 5 (plus rel_time). The file length must be an exact
/// multiple of the record size.
inline PointCloud read_point_blob(const std::filesystem::path& path, int stride = 4) {
  if (stride != 4 && stride != 5) {
    throw InvariantViolation("point blob stride must be 4 or 5");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw MissingFile("cannot open " + path.string());
  }
  in.seekg(0, std::ios::end);
  const std::streamoff bytes = in.tellg();
  in.seekg(0, std::ios::beg);
  const std::size_t record = 4u * static_cast<std::size_t>(stride);
  if (bytes < 0 || static_cast<std::size_t>(bytes) % record != 0) {
    throw TruncatedFile(detail::strprintf(
        "%s: length %lld is not a multiple of the %zu-byte record",
        path.string().c_str(), static_cast<long long>(bytes), record));
  }
  const std::size_t n = static_cast<std::size_t>(bytes) / record;
  std::vector<float> raw(n * static_cast<std::size_t>(stride));
  if (n > 0) {
    in.read(reinterpret_cast<char*>(raw.data()), bytes);
    if (!in) {
      throw IoError("short read on " + path.string());
    }
  }
  PointCloud pc(stride == 5);
  pc.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* r = raw.data() + i * static_cast<std::size_t>(stride);
    if (stride == 4) {
      pc.add(r[0], r[1], r[2], r[3]);
    } else {
      pc.add(r[0], r[1], r[2], r[3], r[4]);
    }
  }
  return pc;
}

/// Writes the cloud as float32 records; stride follows the rel_time channel.
inline void write_point_blob(const PointCloud& pc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  const int stride = pc.has_rel_time() ? 5 : 4;
  std::vector<float> raw(pc.size() * static_cast<std::size_t>(stride));
  for (std::size_t i = 0; i < pc.size(); ++i) {
    float* r = raw.data() + i * static_cast<std::size_t>(stride);
    r[0] = static_cast<float>(pc.x()[i]);
    r[1] = static_cast<float>(pc.y()[i]);
    r[2] = static_cast<float>(pc.z()[i]);
    r[3] = static_cast<float>(pc.intensity()[i]);
    if (stride == 5) r[4] = static_cast<float>(pc.rel_time()[i]);
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!out) {
    throw IoError("short write on " + path.string());
  }
}

// ---------------------------------------------------------------------------
// Native box files
// ---------------------------------------------------------------------------

/// Box line: `class cx cy cz length width height heading [score] [num_points]`.
/// A lone ninth field is a score if it contains a decimal point (scores are
/// written %.6f) and a num_points count if it is a bare integer.
inline Box3D parse_box_line(std::string_view line) {
  const auto tok = detail::split_whitespace(line);
  if (tok.size() < 8 || tok.size() > 10) {
    throw FieldCountError(detail::strprintf(
        "box line has %zu fields, expected 8 to 10", tok.size()));
  }
  const ObjectClass cls = object_class_from_string(tok[0]);
  double v[7];
  for (int i = 0; i < 7; ++i) {
    const auto d = detail::parse_double(tok[i + 1]);
    if (!d) {
      throw NumericParseError("bad numeric field: " + std::string(tok[i + 1]));
    }
    v[i] = *d;
  }
  std::optional<double> score;
  std::optional<std::int64_t> num_points;
  auto parse_score = [](std::string_view t) {
    const auto d = detail::parse_double(t);
    if (!d) throw NumericParseError("bad score field: " + std::string(t));
    return *d;
  };
  auto parse_count = [](std::string_view t) {
    const auto n = detail::parse_int(t);
    if (!n) throw NumericParseError("bad num_points field: " + std::string(t));
    return *n;
  };
  if (tok.size() == 9) {
    const bool looks_integral =
        tok[8].find_first_not_of("-0123456789") == std::string_view::npos;
    if (looks_integral) {
      num_points = parse_count(tok[8]);
    } else {
      score = parse_score(tok[8]);
    }
  } else if (tok.size() == 10) {
    score = parse_score(tok[8]);
    num_points = parse_count(tok[9]);
  }
  return Box3D(Vec3(v[0], v[1], v[2]), v[3], v[4], v[5], v[6], cls, score,
               num_points);
}

inline std::string serialize_box_line(const Box3D& b) {
  std::string line(to_string(b.object_class()));
  line += detail::strprintf(" %.6f %.6f %.6f %.6f %.6f %.6f %.6f",
                            b.center().x(), b.center().y(), b.center().z(),
                            b.length(), b.width(), b.height(), b.heading());
  if (b.score()) line += detail::strprintf(" %.6f", *b.score());
  if (b.num_points()) {
    line += detail::strprintf(" %lld", static_cast<long long>(*b.num_points()));
  }
  return line;
}

inline std::vector<Box3D> read_box_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw MissingFile("cannot open " + path.string());
  }
  std::vector<Box3D> boxes;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    boxes.push_back(parse_box_line(line));
  }
  return boxes;
}

inline void write_box_file(std::span<const Box3D> boxes,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  for (const Box3D& b : boxes) {
    out << serialize_box_line(b) << '\n';
  }
  if (!out) {
    throw IoError("short write on " + path.string());
  }
}

// ---------------------------------------------------------------------------
// Native sequence format
// ---------------------------------------------------------------------------
//
// Directory layout:
//   manifest.txt   header plus one line per frame
//   frame_NNNNNN.bin / frame_NNNNNN.txt   point blob and box file per frame
//
// Manifest grammar:
//   line 1:  seqformat v1
//   line 2:  id <token>
//   line 3:  stride=4|5
//   then:    frame <idx> <timestamp %.9f> <12 pose reals %.12e, row-major
//            top 3 rows of the 4x4> points=<file> boxes=<file>

namespace detail {

inline std::string frame_base_name(std::size_t idx) {
  return strprintf("frame_%06zu", idx);
}

/// Rejects path tokens that could escape the sequence directory.
inline void check_plain_filename(std::string_view name) {
  if (name.empty() || name.find('/') != std::string_view::npos ||
      name.find('\\') != std::string_view::npos || name == "." || name == "..") {
    throw MalformedManifest("frame file reference must be a plain filename: " +
                            std::string(name));
  }
}

}  // namespace detail

inline void write_sequence(const Sequence& seq, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create " + dir.string() + ": " + ec.message());
  }
  std::ofstream man(dir / "manifest.txt", std::ios::trunc);
  if (!man) {
    throw IoError("cannot open manifest for writing in " + dir.string());
  }
  man << "seqformat v1\n";
  man << "id " << seq.id() << "\n";
  man << "stride=4\n";
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Frame& f = seq[i];
    const std::string base = detail::frame_base_name(i);
    man << "frame " << i << detail::strprintf(" %.9f", f.timestamp);
    const geometry::Mat4& m = f.pose.matrix();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        man << detail::strprintf(" %.12e", m(r, c));
      }
    }
    man << " points=" << base << ".bin boxes=" << base << ".txt\n";
    write_point_blob(f.cloud, dir / (base + ".bin"));
    write_box_file(f.boxes, dir / (base + ".txt"));
  }
  if (!man) {
    throw IoError("short write on manifest in " + dir.string());
  }
}

inline Sequence read_sequence(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.txt";
  std::ifstream man(manifest_path);
  if (!man) {
    throw MissingFile("cannot open " + manifest_path.string());
  }
  std::string line;
  if (!std::getline(man, line) || line != "seqformat v1") {
    throw MalformedManifest("manifest must start with 'seqformat v1'");
  }
  if (!std::getline(man, line)) {
    throw MalformedManifest("manifest missing id line");
  }
  const auto id_tok = detail::split_whitespace(line);
  if (id_tok.size() != 2 || id_tok[0] != "id") {
    throw MalformedManifest("bad id line: " + line);
  }
  const std::string id(id_tok[1]);
  if (!std::getline(man, line)) {
    throw MalformedManifest("manifest missing stride line");
  }
  int stride = 0;
  if (line == "stride=4") {
    stride = 4;
  } else if (line == "stride=5") {
    stride = 5;
  } else {
    throw MalformedManifest("bad stride line: " + line);
  }

  std::vector<Frame> frames;
  std::size_t expected_idx = 0;
  while (std::getline(man, line)) {
    if (line.empty()) continue;
    const auto tok = detail::split_whitespace(line);
    if (tok.size() != 17 || tok[0] != "frame") {
      throw MalformedManifest("bad frame line: " + line);
    }
    const auto idx = detail::parse_int(tok[1]);
    if (!idx || static_cast<std::size_t>(*idx) != expected_idx) {
      throw MalformedManifest(detail::strprintf(
          "frame index %s out of order (expected %zu)",
          std::string(tok[1]).c_str(), expected_idx));
    }
    const auto ts = detail::parse_double(tok[2]);
    if (!ts) {
      throw MalformedManifest("bad timestamp: " + std::string(tok[2]));
    }
    geometry::Mat4 m = geometry::Mat4::Identity();
    for (int k = 0; k < 12; ++k) {
      const auto v = detail::parse_double(tok[3 + k]);
      if (!v) {
        throw MalformedManifest("bad pose value: " + std::string(tok[3 + k]));
      }
      m(k / 4, k % 4) = *v;
    }
    constexpr std::string_view kPointsKey = "points=";
    constexpr std::string_view kBoxesKey = "boxes=";
    if (tok[15].substr(0, kPointsKey.size()) != kPointsKey ||
        tok[16].substr(0, kBoxesKey.size()) != kBoxesKey) {
      throw MalformedManifest("bad frame file references: " + line);
    }
    const std::string_view points_name = tok[15].substr(kPointsKey.size());
    const std::string_view boxes_name = tok[16].substr(kBoxesKey.size());
    detail::check_plain_filename(points_name);
    detail::check_plain_filename(boxes_name);

    Frame frame;
    frame.timestamp = *ts;
    try {
      frame.pose = geometry::Transform::from_matrix(m);
    } catch (const NonRigidTransform& e) {
      throw InvariantViolation(expected_idx, e.what());
    }
    const auto points_path = dir / std::string(points_name);
    const auto boxes_path = dir / std::string(boxes_name);
    if (!std::filesystem::exists(points_path)) {
      throw MissingFile("missing point blob " + points_path.string());
    }
    if (!std::filesystem::exists(boxes_path)) {
      throw MissingFile("missing box file " + boxes_path.string());
    }
    try {
      frame.cloud = read_point_blob(points_path, stride);
      frame.boxes = read_box_file(boxes_path);
    } catch (const MissingFile&) {
      throw;
    } catch (const Error& e) {
      throw InvariantViolation(expected_idx, e.what());
    }
    frames.push_back(std::move(frame));
    ++expected_idx;
  }
  return Sequence(id, std::move(frames));
}

}  // namespace seqlidar

#endif  // SEQLIDAR_DATAMODEL_HPP
