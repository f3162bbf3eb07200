#pragma once

#include <stdexcept>
#include <string>

namespace occmeas {

/// Exit-code taxonomy of the command layer:
/// 2 config, 3 statistical guard, 4 model violation, 5 numerical failure.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StatGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelViolation : std::runtime_error {
  ModelViolation(const std::string& what, std::string dump_text)
      : std::runtime_error(what), dump(std::move(dump_text)) {}
  std::string dump;
};

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace occmeas
