#pragma once

#include <stdexcept>
#include <string>

namespace mic {

// Invalid argument to a pure operation (bad extents, offsets outside a cell, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A configuration that cannot be realised (hierarchy too coarse, rank count mismatch, ...).
class InvalidConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfDomain : public std::runtime_error {
 public:
  OutOfDomain(const std::string& what, std::size_t marker)
      : std::runtime_error(what), marker_index(marker) {}
  std::size_t marker_index;
};

class CommunicationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConstraintViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mic
