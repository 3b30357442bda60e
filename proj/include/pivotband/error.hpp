#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pivotband {

enum class ErrorCode {
  invalid_argument,
  domain,
  singular_design,
  degenerate_covariate,
  bread_singular,
  degenerate_meat,
  degenerate_leverage,
  unsupported_correction,
  numeric_domain,
  parse,
  empty_data,
  config,
  io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-readable category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pivotband
