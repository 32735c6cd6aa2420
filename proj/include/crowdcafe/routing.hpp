#pragma once

// Job visibility, instance assembly with gold injection, and submission.
// Every operation runs inside a caller-supplied store transaction so that a
// claim or a submission commits as one unit.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "crowdcafe/model.hpp"
#include "crowdcafe/storage.hpp"

namespace crowdcafe {

struct ReservationPolicy {
  int ttl_seconds = 600;
};

/// Pure visibility predicate: job Published, worker not banned for it, and
/// every preselection rule holds against `history`.
bool eligible(const Worker& worker, const Job& job, const std::set<std::string>& history);

struct AvailableJob {
  Job job;
  int instances = 0;  // ceil(claimable units / batch_size)
};

/// Published, eligible jobs in `category` with something left to claim.
std::vector<AvailableJob> list_available(StoreTxn& txn, std::string_view worker_id, Category category);

/// Instances the worker could still claim from `job`.
int remaining_instances(StoreTxn& txn, const Job& job, std::string_view worker_id);

struct ClaimContext {
  ReservationPolicy policy;
  Timestamp now;
  std::uint64_t seed = 0;  // the per-claim stream also mixes job, worker and claim number
};

/// Errors: NotEligible, AlreadyReserved, NothingAvailable.
TaskInstance claim_next(StoreTxn& txn, std::string_view worker_id, std::string_view job_id, const ClaimContext& ctx);

struct UnitAck {
  std::string unit_id;
  bool accepted = true;
};

struct SubmitResult {
  TaskInstance instance;
  std::vector<UnitAck> units;
  bool banned = false;   // this submission got the worker banned
  Cents credited;        // 0 when banned
};

/// answers: unit id -> field values. Errors: UnknownInstance, NotReserver,
/// ReservationExpired, conflict (already submitted), MissingAnswerField,
/// KindMismatch, invalid_argument (answers for units outside the instance or
/// undeclared fields).
SubmitResult submit_instance(StoreTxn& txn, std::string_view worker_id, std::string_view instance_id,
                             const std::map<std::string, ValueMap>& answers, ContextLabel context,
                             Timestamp now);

/// Expires every live reservation with reserved_at + ttl < now and returns
/// its units to the pool. Idempotent.
int expire_reservations(StoreTxn& txn, Timestamp now);

/// Splitmix64 step; exposed for tests and the simulator.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace crowdcafe
