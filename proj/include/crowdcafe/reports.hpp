#pragma once

// Requestor results and analytics exports for one job.

#include <optional>
#include <string>
#include <vector>

#include "crowdcafe/model.hpp"
#include "crowdcafe/storage.hpp"

namespace crowdcafe::reports {

/// Every judgment of the job in submission order.
std::vector<Judgment> job_judgments(StoreTxn& txn, const Job& job);

/// {"job", "units": [...], "judgments": [...]}. Open units report status
/// "Pending".
json results_json(StoreTxn& txn, const Job& job);

/// One row per unit plus a header.
std::string results_csv(StoreTxn& txn, const Job& job);

/// One row per judgment plus a header, with duration and context.
std::string judgments_csv(StoreTxn& txn, const Job& job);

/// Fleiss kappa over the unflagged judgments of regular units, using
/// `field` (default: the first text field) and min_judgments raters.
json kappa_json(StoreTxn& txn, const Job& job, const std::optional<std::string>& field = {});

/// Execution times per submitted instance, context shares and, for every
/// list field, the share of answers with at least three items.
json stats_json(StoreTxn& txn, const Job& job);

/// Aligned "key  value" lines, nested keys joined with '.'.
std::string to_text(const json& report);

}  // namespace crowdcafe::reports
