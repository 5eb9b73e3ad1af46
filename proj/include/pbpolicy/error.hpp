#pragma once

#include <stdexcept>
#include <string>

namespace pbpolicy {

// Bad user input: malformed files, violated preconditions, infeasible requests.
// The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical or I/O failure during an otherwise valid run. CLI exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pbpolicy
