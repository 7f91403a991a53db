#pragma once

#include <stdexcept>
#include <string>

namespace nisdl {

// Numeric values are mirrored by nisdl_status in nisdl.h.
enum class ErrorCode : int {
  ok = 0,
  config = 1,
  io = 2,
  shape = 3,
  bounds = 4,
  insufficient_data = 5,
  degenerate_design = 6,
  out_of_range = 7,
  domain = 8,
  state = 9,
  divergence = 10,
  split = 11,
  profile = 12,
  empty_data = 13,
  internal = 99,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace nisdl
