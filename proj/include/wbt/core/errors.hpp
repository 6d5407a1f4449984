#pragma once

#include <stdexcept>
#include <string>

namespace wbt {

/// Malformed input data (clip files, model files, datasets).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text-format parse failure carrying the 1-based offending line.
class ParseError : public DataError {
 public:
  ParseError(int line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Invalid configuration or out-of-range parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The simulator produced a non-finite quantity.
class IntegrationFault : public std::runtime_error {
 public:
  IntegrationFault(const std::string& quantity)
      : std::runtime_error("non-finite simulator quantity: " + quantity), quantity_(quantity) {}
  const std::string& quantity() const { return quantity_; }

 private:
  std::string quantity_;
};

/// Training produced a non-finite loss or parameter.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wbt
