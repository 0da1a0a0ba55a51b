#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sptcov {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input shapes disagree (grid sizes, matrix dimensions, stack sizes).
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// A lag / bandwidth outside the admissible range for the grid.
class BandwidthOutOfRange : public Error {
 public:
  BandwidthOutOfRange(long d, long max_d)
      : Error("bandwidth d=" + std::to_string(d) + " is out of range; valid range is 0.." +
              std::to_string(max_d)),
        d_(d),
        max_d_(max_d) {}
  long d() const { return d_; }
  long max_d() const { return max_d_; }

 private:
  long d_;
  long max_d_;
};

/// The shifted trace used as a normalizer vanished.
class DegenerateTrace : public Error {
 public:
  explicit DegenerateTrace(long d)
      : Error("shifted trace at d=" + std::to_string(d) + " is (numerically) zero"), d_(d) {}
  long d() const { return d_; }

 private:
  long d_;
};

/// A dense 4-index object was requested above the configured grid cap.
class OracleCapExceeded : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class RankError : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Malformed file content; `offset` is the byte (or line) position where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace sptcov
