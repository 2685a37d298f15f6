#pragma once

#include <stdexcept>
#include <string>

namespace covseg {

/// Error categories; the numeric values double as CLI exit codes.
enum class ErrorKind : int {
  kUsage = 2,
  kIo = 3,
  kData = 4,
  kNumerical = 5,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::kNumerical, what) {}
};

/// The completion heatmap has no voxel above the centerline threshold.
class NoCenterlineSignal : public NumericalError {
 public:
  explicit NoCenterlineSignal(const std::string& what) : NumericalError(what) {}
};

/// The completion heatmap has no near-zero surface band.
class NoSurfaceSignal : public NumericalError {
 public:
  explicit NoSurfaceSignal(const std::string& what) : NumericalError(what) {}
};

}  // namespace covseg
