#ifndef WDDP_CORE_ERRORS_HPP
#define WDDP_CORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wddp {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments or an invalid run configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed input data (CSV, JSON).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures; the message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

// The privacy budget cannot be met by any admissible noise scale.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace wddp

#endif  // WDDP_CORE_ERRORS_HPP
