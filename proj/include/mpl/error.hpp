#ifndef MPL_ERROR_HPP
#define MPL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mpl {

// Enumeration or table size above a configured cap.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Value outside the support or the model's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Tables or specs whose shapes do not line up.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Text input that does not follow a documented grammar. Carries the line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Every restart of a fit ended at a -inf objective.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mpl

#endif  // MPL_ERROR_HPP
