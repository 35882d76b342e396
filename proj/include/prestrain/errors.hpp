#ifndef PRESTRAIN_ERRORS_HPP_
#define PRESTRAIN_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prestrain {

/// Malformed or inconsistent user input (spec files, CSV fields, flags).
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public SpecError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : SpecError(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Expression evaluation outside the domain of a function (log/sqrt of negatives, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnboundVariable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical precondition failure: non-SPD or singular matrices.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input was rejected because a residual exceeded its tolerance.
class ToleranceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace prestrain

#endif  // PRESTRAIN_ERRORS_HPP_
