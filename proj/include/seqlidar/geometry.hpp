// Copyright 2026 The seqlidar Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SEQLIDAR_GEOMETRY_HPP
#define SEQLIDAR_GEOMETRY_HPP

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "seqlidar/errors.hpp"

namespace seqlidar::geometry {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kPi = std::numbers::pi;

/// Tolerance for accepting a 3x3 block as a rotation (orthonormality and
/// determinant checked entrywise against this bound).
inline constexpr double kRigidTolerance = 1e-9;

/// Rigid transform: rotation plus translation as a 4x4 homogeneous matrix
/// whose last row is exactly (0, 0, 0, 1).
///
/// Matrices supplied from the outside are validated at construction; a
/// scaled, skewed, or reflected upper-left block is rejected with
/// NonRigidTransform. Internally derived results (composition, inverse,
/// axis rotations) are rigid by construction and skip the check.
class Transform {
 public:
  /// Identity transform.
  Transform() : matrix_(Mat4::Identity()) {}

  /// Builds from a raw 4x4 matrix, validating rigidity.
  static Transform from_matrix(const Mat4& m) {
    if (!m.allFinite()) {
      throw NonRigidTransform("transform matrix has non-finite entries");
    }
    if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0) {
      throw NonRigidTransform("transform last row must be (0, 0, 0, 1)");
    }
    return from_parts(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
  }

  /// Builds from a rotation and a translation, validating the rotation.
  static Transform from_parts(const Mat3& rotation, const Vec3& translation) {
    if (!rotation.allFinite() || !translation.allFinite()) {
      throw NonRigidTransform("transform has non-finite entries");
    }
    const Mat3 gram = rotation.transpose() * rotation;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > kRigidTolerance) {
      throw NonRigidTransform("rotation block is not orthonormal");
    }
    if (std::abs(rotation.determinant() - 1.0) > kRigidTolerance) {
      throw NonRigidTransform("rotation block is not proper (det != 1)");
    }
    return Transform(rotation, translation);
  }

  static Transform translation(double x, double y, double z) {
    return Transform(Mat3::Identity(), Vec3(x, y, z));
  }

  static Transform translation(const Vec3& t) {
    return Transform(Mat3::Identity(), t);
  }

  static Transform rot_x(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 r;
    r << 1, 0, 0, 0, c, -s, 0, s, c;
    return Transform(r, Vec3::Zero());
  }

  static Transform rot_y(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 r;
    r << c, 0, s, 0, 1, 0, -s, 0, c;
    return Transform(r, Vec3::Zero());
  }

  static Transform rot_z(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 r;
    r << c, -s, 0, s, c, 0, 0, 0, 1;
    return Transform(r, Vec3::Zero());
  }

  const Mat4& matrix() const { return matrix_; }

  Mat3 rotation() const { return matrix_.topLeftCorner<3, 3>(); }

  Vec3 translation_part() const { return matrix_.topRightCorner<3, 1>(); }

  /// Rigid closed-form inverse (R^T, -R^T p).
  Transform inverse() const {
    const Mat3 rt = rotation().transpose();
    return Transform(rt, -(rt * translation_part()));
  }

  /// Applies the transform to a point.
  Vec3 apply(const Vec3& p) const {
    return rotation() * p + translation_part();
  }

  /// Composition: (a * b) applies b first, then a.
  friend Transform operator*(const Transform& a, const Transform& b) {
    return Transform(a.rotation() * b.rotation(),
                     a.rotation() * b.translation_part() +
                         a.translation_part());
  }

 private:
  // Trusted constructor: rotation assumed rigid, last row set exactly.
  Transform(const Mat3& rotation, const Vec3& translation) {
    matrix_.setZero();
    matrix_.topLeftCorner<3, 3>() = rotation;
    matrix_.topRightCorner<3, 1>() = translation;
    matrix_(3, 3) = 1.0;
  }

  Mat4 matrix_;
};

/// Composition helper; result applies b first, then a.
inline Transform compose(const Transform& a, const Transform& b) {
  return a * b;
}

inline Transform invert(const Transform& t) { return t.inverse(); }

/// Applies t to every point, preserving order.
inline std::vector<Vec3> transform_points(const Transform& t,
                                          std::span<const Vec3> pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  const Mat3 r = t.rotation();
  const Vec3 p = t.translation_part();
  for (const Vec3& v : pts) {
    out.push_back(r * v + p);
  }
  return out;
}

/// Canonicalizes an angle into [-pi, pi). Exactly idempotent: values already
/// in range are returned bit-identically.
inline double wrap_heading(double theta) {
  if (!std::isfinite(theta)) {
    throw NonFiniteInput("heading must be finite");
  }
  double r = std::remainder(theta, 2.0 * kPi);
  if (r >= kPi) {
    r = -kPi;
  }
  return r;
}

/// 3x4 camera projection matrix.
class ProjectionMatrix {
 public:
  using Matrix = Eigen::Matrix<double, 3, 4>;

  explicit ProjectionMatrix(const Matrix& m) : matrix_(m) {
    if (!m.allFinite()) {
      throw NonFiniteInput("projection matrix has non-finite entries");
    }
  }

  /// Ideal pinhole: focal length f, principal point (cx, cy), no skew.
  static ProjectionMatrix pinhole(double f, double cx, double cy) {
    Matrix m;
    m << f, 0, cx, 0, 0, f, cy, 0, 0, 0, 1, 0;
    return ProjectionMatrix(m);
  }

  const Matrix& matrix() const { return matrix_; }

 private:
  Matrix matrix_;
};

struct ImagePoint {
  double u = 0.0;      ///< pixel column
  double v = 0.0;      ///< pixel row
  double depth = 0.0;  ///< camera-frame forward coordinate, meters
};

/// Projects a point through the chain p_img * r_rect * t_ref, with the
/// perspective divide applied. Depth is the forward coordinate of the point
/// in the rectified camera frame; non-positive depth throws BehindCamera.
inline ImagePoint project_to_image(const ProjectionMatrix& p_img,
                                   const Transform& r_rect,
                                   const Transform& t_ref, const Vec3& x) {
  const Vec3 cam = r_rect.apply(t_ref.apply(x));
  if (cam.z() <= 0.0) {
    throw BehindCamera("point is not in front of the image plane");
  }
  const Eigen::Vector3d y = p_img.matrix() * cam.homogeneous();
  return {y.x() / y.z(), y.y() / y.z(), cam.z()};
}

}  // namespace seqlidar::geometry

#endif  // SEQLIDAR_GEOMETRY_HPP
