#pragma once

#include <stdexcept>
#include <string>

namespace ufin {

// Exit-code mapping used by the CLI: ConfigError -> 1, DataError -> 2,
// NumericError -> 3. Everything else is a programming error.

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ufin
