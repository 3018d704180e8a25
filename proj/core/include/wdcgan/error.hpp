#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wdcgan {

enum class ErrorKind {
  invalid_argument,
  shape,
  insufficient_data,
  missing_synthetic,
  aliasing_risk,
  parse,
  empty_input,
  diverged,
  undefined_metric,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  // The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace wdcgan
