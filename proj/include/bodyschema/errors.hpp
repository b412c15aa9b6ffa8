#pragma once

#include <stdexcept>
#include <string>

namespace bodyschema {

// Bad user-supplied configuration (flags, config keys, out-of-range sizes).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data violates a documented invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Graph structure is not a tree (cycle, disconnected, multiple roots).
class StructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value lies outside the domain of a mathematical function.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Floating point breakdown: non-SPD matrices, total underflow, singular solves.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sampler state cannot support the requested operation.
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Serialized artifact is missing, truncated, or of the wrong format/version.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bodyschema
