#pragma once

// Synthetic worker campaign driven through the HTTP API of an in-process
// service. With parallelism 1 the run is a deterministic discrete-event
// simulation on a virtual clock: same store contents and seed, same report.

#include <cstdint>
#include <string>

#include "crowdcafe/platform.hpp"

namespace crowdcafe {

struct SimConfig {
  int workers = 52;
  double accuracy = 0.95;  // chance of giving the true answer for a unit
  std::uint64_t seed = 1;
  int parallelism = 1;  // >1 runs worker groups on threads; not reproducible
  // Instance execution time is log-normal around the category's nominal
  // duration times `duration_scale`.
  double duration_scale = 1.0;
  double duration_sigma = 0.5;
  double think_seconds = 5.0;  // mean pause between instances
  std::string job_id;          // empty: any published job
  std::string worker_prefix = "sim-w";
  Timestamp start = Timestamp{1399885200000};  // 2014-05-12T09:00:00Z
};

struct SimReport {
  int workers = 0;
  int claims = 0;
  int submissions = 0;
  int judgments = 0;  // units answered by the simulated workers
  int bans = 0;
  int expired = 0;
  int units_total = 0;      // regular units of the simulated jobs
  int units_finalized = 0;  // Finalized or NoAgreement
  int units_no_agreement = 0;
  int min_counted_judgments = 0;  // smallest unflagged judgment count of a regular unit
  bool coverage_ok = false;       // every regular unit reached min_judgments
  int duplicate_judgments = 0;
  Cents payouts;
  bool conservation_ok = false;  // balances match logs and credited amounts
  std::string hash;              // FNV-1a 64 over the report body
};

json to_json(const SimReport& r);

/// Errors: NoPublishedJobs.
SimReport simulate(Store& store, const SimConfig& config, PlatformConfig platform_config = {});

/// The answer a perfectly accurate simulated worker gives for a unit; gold
/// fixtures built with it are answered correctly at the configured accuracy.
ValueMap simulated_truth(const Job& job, const Payload& payload);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace crowdcafe
