#pragma once

#include <stdexcept>
#include <string>

namespace liquid {

// Bad argument to a pure function or operation precondition.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Cross-field inconsistency found while loading or validating a config.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Repair attempted on an object with fewer than k_c intact fragments.
struct DataLossError : std::runtime_error {
  DataLossError(const std::string& what, int position)
      : std::runtime_error(what), position(position) {}
  int position;
};

// Decoding attempted with fewer than k distinct fragments.
struct UnrecoverableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An operation invoked out of order (e.g. launch before progress completes).
struct SequencingError : std::logic_error {
  using std::logic_error::logic_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Explicit and aggregate engines disagreed; index is the first divergent row.
struct EquivalenceError : std::runtime_error {
  EquivalenceError(const std::string& what, long index)
      : std::runtime_error(what), index(index) {}
  long index;
};

// Decoded bytes did not match the original payload.
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace liquid
