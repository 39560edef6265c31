#include "refcanvas/error.hpp"

namespace refcanvas {

std::string_view code_name(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::config: return "config_error";
  case ErrorCode::shape_mismatch: return "shape_mismatch";
  case ErrorCode::numeric: return "non_finite_value";
  case ErrorCode::mode: return "wrong_transfer_mode";
  case ErrorCode::mask: return "mask_unavailable";
  case ErrorCode::generation: return "generation_failed";
  case ErrorCode::backend_unavailable: return "backend_unavailable";
  case ErrorCode::input: return "invalid_input";
  case ErrorCode::ordering: return "target_required";
  case ErrorCode::duplicate: return "duplicate_reference";
  case ErrorCode::not_found: return "not_found";
  case ErrorCode::validation: return "validation_failed";
  case ErrorCode::timeout: return "generation_timeout";
  case ErrorCode::output_exists: return "output_exists";
  case ErrorCode::io: return "io_error";
  }
  return "unknown";
}

} // namespace refcanvas
