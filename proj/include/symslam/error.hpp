#pragma once

#include <stdexcept>
#include <string>

namespace symslam {

/// Base class for all errors raised by the library. `kind()` is a stable,
/// machine-readable tag used in the CLI's error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error("validation_error", what) {}
};

class NoRotationDispersion : public Error {
 public:
  NoRotationDispersion() : Error("no_rotation_dispersion", "all relative rotations are near zero") {}
};

class EmptyClustering : public Error {
 public:
  EmptyClustering() : Error("empty_clustering", "every angle was classified as noise") {}
};

class GraphError : public Error {
 public:
  explicit GraphError(const std::string& what) : Error("graph_error", what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error("numeric_error", what) {}
};

}  // namespace symslam
