#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace maestro {

/// Error with a stable machine-readable kind ("PortEmpty", "UnknownTool", ...)
/// next to the human-readable message. Kinds are what tests, step results and
/// exit-code mapping key on.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

}  // namespace maestro
