#pragma once

#include <stdexcept>
#include <string>

namespace dynsel {

/// Invalid construction-time parameters (bad drift schedule, bad knobs).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input data; the message names the offending row and column.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A query was issued against a selector with an empty pool or validation set.
class NotReadyError : public std::logic_error {
 public:
  NotReadyError() : std::logic_error("selector not ready: empty pool or validation set") {}
  using std::logic_error::logic_error;
};

}  // namespace dynsel
