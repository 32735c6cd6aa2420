#include "crowdcafe/error.hpp"

namespace crowdcafe {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::missing_field: return "missing_field";
    case Errc::invalid_batch_size: return "invalid_batch_size";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::unknown_category: return "unknown_category";
    case Errc::unknown_context: return "unknown_context";
    case Errc::dangling_preselection_ref: return "dangling_preselection_ref";
    case Errc::negative_duration: return "negative_duration";
    case Errc::not_utf8: return "not_utf8";
    case Errc::empty_header: return "empty_header";
    case Errc::duplicate_column: return "duplicate_column";
    case Errc::ragged_row: return "ragged_row";
    case Errc::unknown_adapter: return "unknown_adapter";
    case Errc::adapter_failure: return "adapter_failure";
    case Errc::kind_mismatch: return "kind_mismatch";
    case Errc::missing_answer_field: return "missing_answer_field";
    case Errc::mixed_units: return "mixed_units";
    case Errc::duplicate_worker: return "duplicate_worker";
    case Errc::nothing_available: return "nothing_available";
    case Errc::already_reserved: return "already_reserved";
    case Errc::not_eligible: return "not_eligible";
    case Errc::reservation_expired: return "reservation_expired";
    case Errc::not_reserver: return "not_reserver";
    case Errc::already_credited: return "already_credited";
    case Errc::unknown_instance: return "unknown_instance";
    case Errc::insufficient_funds: return "insufficient_funds";
    case Errc::sold_out: return "sold_out";
    case Errc::ragged_matrix: return "ragged_matrix";
    case Errc::too_few_raters: return "too_few_raters";
    case Errc::field_not_list: return "field_not_list";
    case Errc::retries_exhausted: return "retries_exhausted";
    case Errc::storage_unavailable: return "storage_unavailable";
    case Errc::unauthorized: return "unauthorized";
    case Errc::forbidden: return "forbidden";
    case Errc::not_found: return "not_found";
    case Errc::conflict: return "conflict";
    case Errc::unknown_job: return "unknown_job";
    case Errc::no_published_jobs: return "no_published_jobs";
    case Errc::config_error: return "config_error";
  }
  return "unknown";
}

}  // namespace crowdcafe
