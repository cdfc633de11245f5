#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace harbour {

/// Base of every error raised by the simulator libraries.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value is missing, malformed or violates an invariant.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Parse failure in one of the structured text formats; carries the 1-based
/// line number of the offending line (0 when not line oriented).
class ParseError : public ConfigError {
 public:
  ParseError(std::string source, int line, const std::string& what)
      : ConfigError(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  int line() const noexcept { return line_; }

 private:
  std::string source_;
  int line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace harbour
