#pragma once

#include <stdexcept>
#include <string>

namespace fluidq {

// Machine-readable failure categories. The CLI maps each category to a
// distinct exit code (see README).
enum class ErrorCategory { io, parse, model, drift, numeric };

constexpr const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::io: return "io";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::model: return "model";
    case ErrorCategory::drift: return "drift";
    case ErrorCategory::numeric: return "numeric";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace fluidq
