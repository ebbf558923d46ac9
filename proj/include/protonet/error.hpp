#pragma once

#include <stdexcept>
#include <string>

namespace protonet {

// All recoverable failures carry a stable machine-parseable category
// (e.g. "invalid-config", "degenerate-prototype") plus a human message.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(category + ": " + message),
        category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

}  // namespace protonet
