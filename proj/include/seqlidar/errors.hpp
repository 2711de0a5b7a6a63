// Copyright 2026 The seqlidar Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SEQLIDAR_ERRORS_HPP
#define SEQLIDAR_ERRORS_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace seqlidar {

/// Base class for every error this library throws. Malformed input of any
/// kind maps to a subclass of Error, never to a crash or an unrelated
/// exception type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// -- geometry --------------------------------------------------------------

class NonRigidTransform : public Error {
 public:
  using Error::Error;
};

class NonFiniteInput : public Error {
 public:
  using Error::Error;
};

class BehindCamera : public Error {
 public:
  using Error::Error;
};

// -- dataset I/O -----------------------------------------------------------

class IoError : public Error {
 public:
  using Error::Error;
};

class MissingFile : public Error {
 public:
  using Error::Error;
};

class MalformedManifest : public Error {
 public:
  using Error::Error;
};

class NonMonotonicTimestamps : public Error {
 public:
  using Error::Error;
};

/// A structural or value invariant was violated while building a domain
/// object. Carries the offending frame index when the violation was found
/// inside a sequence.
class InvariantViolation : public Error {
 public:
  explicit InvariantViolation(const std::string& msg) : Error(msg) {}
  InvariantViolation(std::size_t frame_index, const std::string& msg)
      : Error("frame " + std::to_string(frame_index) + ": " + msg),
        frame_index_(frame_index) {}

  std::optional<std::size_t> frame_index() const { return frame_index_; }

 private:
  std::optional<std::size_t> frame_index_;
};

// -- KITTI codecs ----------------------------------------------------------

class FieldCountError : public Error {
 public:
  using Error::Error;
};

class NumericParseError : public Error {
 public:
  using Error::Error;
};

class TruncatedFile : public Error {
 public:
  using Error::Error;
};

class MalformedCalib : public Error {
 public:
  using Error::Error;
};

class MalformedPose : public Error {
 public:
  using Error::Error;
};

class NonRigidPose : public Error {
 public:
  using Error::Error;
};

// -- conversion ------------------------------------------------------------

class UnknownClass : public Error {
 public:
  using Error::Error;
};

class UnknownCamera : public Error {
 public:
  using Error::Error;
};

// -- temporal --------------------------------------------------------------

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

// -- postprocessing / evaluation -------------------------------------------

class MissingTimestampChannel : public Error {
 public:
  using Error::Error;
};

class DuplicateClassFilter : public Error {
 public:
  using Error::Error;
};

class MixedClasses : public Error {
 public:
  using Error::Error;
};

class EmptyGroundTruth : public Error {
 public:
  using Error::Error;
};

}  // namespace seqlidar

#endif  // SEQLIDAR_ERRORS_HPP
