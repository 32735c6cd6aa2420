#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crowdcafe {

enum class Errc {
  // core-model
  missing_field,
  invalid_batch_size,
  invalid_argument,
  unknown_category,
  unknown_context,
  dangling_preselection_ref,
  negative_duration,
  // ingestion
  not_utf8,
  empty_header,
  duplicate_column,
  ragged_row,
  unknown_adapter,
  adapter_failure,
  // quality
  kind_mismatch,
  missing_answer_field,
  mixed_units,
  duplicate_worker,
  // routing
  nothing_available,
  already_reserved,
  not_eligible,
  reservation_expired,
  not_reserver,
  // ledger
  already_credited,
  unknown_instance,
  insufficient_funds,
  sold_out,
  // analytics
  ragged_matrix,
  too_few_raters,
  field_not_list,
  // storage
  retries_exhausted,
  storage_unavailable,
  // service / admin
  unauthorized,
  forbidden,
  not_found,
  conflict,
  unknown_job,
  no_published_jobs,
  config_error,
};

/// Machine-readable snake_case code, used verbatim in API error bodies.
std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail = {})
      : std::runtime_error(std::string(errc_name(code)) +
                           (detail.empty() ? "" : ": " + detail)),
        code_(code),
        detail_(std::move(detail)) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace crowdcafe
