#pragma once

#include <stdexcept>
#include <string>

namespace sage {

enum class Errc {
  // ontology
  unsupported_layer,
  out_of_range,
  missing_dimension,
  unknown_dimension,
  score_out_of_range,
  illegal_step,
  confidence_out_of_range,
  // corpus
  manifest_parse,
  duplicate_story_id,
  // prompts
  missing_text,
  missing_metadata,
  invalid_round,
  transcript_length_mismatch,
  incomplete_transcript,
  template_missing,
  template_parse,
  // llm client
  transport,
  auth,
  timeout,
  not_structured,
  config_invalid,
  // protocol
  schema_violation,
  cell_failure,
  // analytics
  layer_mismatch,
  empty_group,
  wrong_arity,
  degenerate_variance,
  too_few_samples,
  too_few_groups,
  length_mismatch,
  invalid_p,
  // store
  duplicate_cell,
  write_error,
  store_corrupt,
  // reports
  empty_store,
  insufficient_groups,
  unpaired_modes,
  missing_layer,
  // cli / io
  usage,
  io_error,
};

const char* errc_name(Errc code);

/// Single exception type for the whole engine; carries a stable code so
/// callers can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace sage
