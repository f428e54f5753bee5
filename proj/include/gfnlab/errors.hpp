#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gfnlab {

/// Malformed or missing input file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input files are readable but describe an impossible graph (e.g. node index
/// outside its graph).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parsed data disagrees with reference statistics.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke a precondition (shape mismatch, empty spec, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

/// Writes a warning line to stderr. Silenced by set_warnings_enabled(false).
void warn(std::string_view message);
void set_warnings_enabled(bool enabled);

}  // namespace gfnlab
