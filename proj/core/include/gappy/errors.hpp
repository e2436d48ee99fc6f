#pragma once

#include <stdexcept>
#include <string>

namespace gappy {

// Malformed .cupt input; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A sentence whose dependency structure cannot be turned into adjacency matrices.
class StructureError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor operands with incompatible extents.
class DimensionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inconsistent data handed to training or scoring.
class DataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gappy
