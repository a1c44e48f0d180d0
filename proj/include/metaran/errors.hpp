#pragma once

#include <stdexcept>
#include <string>

namespace metaran {

// Invalid or inconsistent configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (bad shapes, infeasible allocation...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Training produced non-finite losses or gradients.
class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed checkpoint, snapshot or CSV input.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace metaran
