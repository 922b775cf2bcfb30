#pragma once

#include <stdexcept>
#include <string>

namespace gcmm {

// Problem with user-supplied input: malformed files, invalid argument
// values, violated preconditions. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure during fitting or evaluation: singular matrices,
// non-finite likelihoods, failed initialization. Exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gcmm
