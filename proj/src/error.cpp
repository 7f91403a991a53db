#include "nisdl/error.hpp"

namespace nisdl {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ok: return "ok";
    case ErrorCode::config: return "config error";
    case ErrorCode::io: return "I/O error";
    case ErrorCode::shape: return "shape error";
    case ErrorCode::bounds: return "bounds error";
    case ErrorCode::insufficient_data: return "insufficient data";
    case ErrorCode::degenerate_design: return "degenerate design";
    case ErrorCode::out_of_range: return "out of range";
    case ErrorCode::domain: return "domain error";
    case ErrorCode::state: return "state error";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::split: return "split error";
    case ErrorCode::profile: return "profile error";
    case ErrorCode::empty_data: return "empty data";
    case ErrorCode::internal: return "internal error";
  }
  return "unknown error";
}

}  // namespace nisdl
