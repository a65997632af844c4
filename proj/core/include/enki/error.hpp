#pragma once

#include <stdexcept>
#include <string>

namespace enki {

/// Base error type thrown by all library operations.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A run produced non-finite particles.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int iteration)
      : Error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

/// Invalid user-supplied configuration; message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace enki
