#pragma once

#include <stdexcept>
#include <string>

namespace navbench {

/// Precondition on a geometric or numeric argument was violated.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A generator (maps, agents, tasks) could not satisfy its constraints.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file or message did not match its schema. `what()` names the field path.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parsed value is well-formed but violates a placement rule.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The external planner wire protocol was violated.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Transport to an external planner failed (closed pipe, refused socket).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid campaign/task configuration detected before any simulation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace navbench
