#pragma once

#include <stdexcept>
#include <string>

namespace handkit {

// Error categories map onto CLI exit codes: validation -> 1,
// numerical failure -> 2, I/O -> 3.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace handkit
