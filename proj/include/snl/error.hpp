#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace snl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configuration or argument failed validation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// A perturbation direction had (numerically) zero norm.
class DegenerateGradient : public Error {
 public:
  using Error::Error;
};

class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

// A clean/noisy stratum needed by a metric was empty.
class EmptyStratum : public Error {
 public:
  using Error::Error;
};

class UndefinedAccuracy : public Error {
 public:
  using Error::Error;
};

// Malformed binary input. offset() is the byte position where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class Diverged : public Error {
 public:
  Diverged(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace snl
