#pragma once

#include <stdexcept>
#include <string>

namespace audiorank {

/// Error categories surfaced by the library. Tests and callers dispatch on
/// the code; the message carries the offending values.
enum class errc {
  dimension_mismatch,
  degenerate_vector,
  empty_input,
  non_positive_temperature,
  non_finite_input,
  out_of_domain,
  length_mismatch,
  shape_mismatch,
  non_square_batch,
  stale_cache,
  invalid_dimension,
  batch_too_large,
  step_out_of_range,
  non_finite_gradient,
  non_finite_loss,
  io_error,
  format_error,
  non_finite_payload,
  index_out_of_range,
  missing_split,
  duplicate_item_id,
  missing_caption,
  invalid_spec,
  invalid_config,
  empty_relevant_set,
  zero_variance,
  invalid_df,
  numeric_failure,
};

const char* errc_name(errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace audiorank
