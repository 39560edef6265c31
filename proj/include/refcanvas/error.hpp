#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace refcanvas {

// Every failure in the library is reported as an Error carrying one of these
// codes. The string form (code_name) is part of the HTTP API and must stay stable.
enum class ErrorCode {
  config,              // invalid configuration (distance model, registry, ...)
  shape_mismatch,      // latent / image / mask dimensions disagree
  numeric,             // non-finite values
  mode,                // attribute used through the wrong transfer path
  mask,                // requested mask region unavailable
  generation,          // backend failed while encoding/generating
  backend_unavailable, // model assets missing or backend not installed
  input,               // undecodable or malformed input image / payload
  ordering,            // operation requires a prior step (e.g. no target yet)
  duplicate,           // image already placed on the canvas
  not_found,           // unknown session, placement, history entry, job
  validation,          // request or scene spec failed validation
  timeout,             // generation exceeded its deadline
  output_exists,       // refusing to overwrite without force
  io,                  // filesystem failure
};

std::string_view code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  /// Offending field or parameter name; empty when not applicable.
  const std::string &field() const noexcept { return field_; }

private:
  ErrorCode code_;
  std::string field_;
};

} // namespace refcanvas
