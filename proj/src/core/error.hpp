#pragma once

#include <stdexcept>
#include <string>

namespace vsseg {

// Error categories mirror the status codes of the public C API so the
// wrapper can map exceptions one-to-one.
enum class ErrorCode {
  io = 1,
  format = 2,
  unsupported = 3,
  dimension = 4,
  shape = 5,
  param = 6,
  validation = 7,
  numeric = 8,
  dependency = 9,
  runner = 10,
  range = 11,
  undefined_metric = 12,
  internal = 13,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorCode::io, w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error(ErrorCode::format, w) {}
};
struct UnsupportedError : Error {
  explicit UnsupportedError(const std::string& w) : Error(ErrorCode::unsupported, w) {}
};
struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error(ErrorCode::dimension, w) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error(ErrorCode::shape, w) {}
};
struct ParamError : Error {
  explicit ParamError(const std::string& w) : Error(ErrorCode::param, w) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error(ErrorCode::validation, w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorCode::numeric, w) {}
};
struct DependencyError : Error {
  explicit DependencyError(const std::string& w) : Error(ErrorCode::dependency, w) {}
};
struct RunnerError : Error {
  RunnerError(const std::string& w, std::string output)
      : Error(ErrorCode::runner, w), captured_output(std::move(output)) {}
  std::string captured_output;
};
struct RangeError : Error {
  explicit RangeError(const std::string& w) : Error(ErrorCode::range, w) {}
};
struct UndefinedMetricError : Error {
  explicit UndefinedMetricError(const std::string& w) : Error(ErrorCode::undefined_metric, w) {}
};

}  // namespace vsseg
