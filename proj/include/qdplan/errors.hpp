#pragma once

#include <stdexcept>
#include <string>

namespace qdplan {

// Bad user input: malformed config files, unknown maze names, invalid flag values.
// The CLI maps these to a distinct exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Anything that goes wrong after configuration was accepted.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File exists but its contents are not a valid artifact (bad magic, truncation,
// trailing bytes, unparsable rows).
class CorruptFileError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

// Tensor/observation dimensions disagree with what a policy or net expects.
class ShapeMismatchError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

// A required policy for an archive occupant could not be found.
class MissingPolicyError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

// Asked to execute a path to a cell the plan never settled.
class UnreachableCellError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

}  // namespace qdplan
