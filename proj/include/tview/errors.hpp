#pragma once

#include <stdexcept>
#include <string>

namespace tview {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- geometry ---
struct PointBehindCamera : Error {
  explicit PointBehindCamera(const std::string& msg = "point behind camera")
      : Error(msg) {}
};
struct DegenerateAnchor : Error {
  explicit DegenerateAnchor(const std::string& msg = "para-perspective anchor too close to camera center")
      : Error(msg) {}
};
struct InvalidRotation : Error {
  explicit InvalidRotation(const std::string& msg = "rotation matrix is not orthonormal")
      : Error(msg) {}
};
struct InvalidIntrinsics : Error {
  explicit InvalidIntrinsics(const std::string& msg = "invalid intrinsics")
      : Error(msg) {}
};

// --- distributions ---
struct NotPositiveDefinite : Error {
  explicit NotPositiveDefinite(const std::string& msg = "matrix is not positive definite")
      : Error(msg) {}
};
struct RankDeficientMap : Error {
  explicit RankDeficientMap(const std::string& msg = "pushforward map is rank deficient")
      : Error(msg) {}
};

// --- triangulation ---
struct InsufficientViews : Error {
  explicit InsufficientViews(const std::string& msg = "triangulation requires at least two views")
      : Error(msg) {}
};
struct DehomogenizationFailure : Error {
  explicit DehomogenizationFailure(const std::string& msg = "homogeneous solution is a point at infinity")
      : Error(msg) {}
};
struct TooManyViews : Error {
  explicit TooManyViews(const std::string& msg = "at most 16 views supported")
      : Error(msg) {}
};

// --- estimation / evaluation ---
struct NoValidObservations : Error {
  explicit NoValidObservations(const std::string& msg = "no valid observations")
      : Error(msg) {}
};
struct DegenerateGeometry : Error {
  explicit DegenerateGeometry(const std::string& msg = "triangulation degenerate and no recovery possible")
      : Error(msg) {}
};
struct IndexOutOfRange : Error {
  explicit IndexOutOfRange(const std::string& msg = "index out of range")
      : Error(msg) {}
};
struct MismatchedFiles : Error {
  explicit MismatchedFiles(const std::string& msg = "estimates and scene files do not match")
      : Error(msg) {}
};

// --- i/o ---
struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(msg) {}
};
struct SchemaVersionMismatch : Error {
  explicit SchemaVersionMismatch(const std::string& msg = "unknown schema_version")
      : Error(msg) {}
};
struct IntegrityError : Error {
  explicit IntegrityError(const std::string& msg = "file fails integrity check")
      : Error(msg) {}
};
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace tview
