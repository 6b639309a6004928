#pragma once

#include <stdexcept>
#include <string>

namespace mileaks {

// Error taxonomy mirrored by the CLI exit codes: validation -> 2,
// numeric/runtime -> 3, transport -> 4.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& msg) : Error(msg) {}
};

}  // namespace mileaks
