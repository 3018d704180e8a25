#include "wdcgan/error.hpp"

namespace wdcgan {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::shape: return "shape";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::missing_synthetic: return "missing-synthetic";
    case ErrorKind::aliasing_risk: return "aliasing-risk";
    case ErrorKind::parse: return "parse";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::diverged: return "diverged";
    case ErrorKind::undefined_metric: return "undefined-metric";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace wdcgan
