#pragma once

#include <stdexcept>
#include <string>

namespace chunkalign {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Point configuration cannot determine a similarity transform
/// (collinear / coincident points, rank-deficient covariance).
class DegenerateConfigurationError : public Error {
 public:
  explicit DegenerateConfigurationError(const std::string& what) : Error(what) {}
};

/// Fewer than the required number of usable correspondences.
class InsufficientCorrespondencesError : public Error {
 public:
  explicit InsufficientCorrespondencesError(const std::string& what) : Error(what) {}
};

/// Sim(3) log requested at the rotation-angle-pi branch point.
class LogSingularityError : public Error {
 public:
  explicit LogSingularityError(const std::string& what) : Error(what) {}
};

/// File format / filesystem failures.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

/// Pose-graph structural or solver failures.
class GraphError : public Error {
 public:
  explicit GraphError(const std::string& what) : Error(what) {}
};

}  // namespace chunkalign
