#pragma once

#include <stdexcept>
#include <string>

namespace scr {

// Malformed arguments handed to a kernel or operator.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid hyperparameters or generator parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A caller broke an API contract (stale cache, shape drift, nondeterminism).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Unreadable or invalid on-disk data. Messages carry "file:line: reason".
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scr
