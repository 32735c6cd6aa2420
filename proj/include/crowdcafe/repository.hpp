#pragma once

// Key layout and typed accessors over the store. Identifiers never contain
// '/' or ':' so they can be embedded in keys and composite ids.
//
//   jobs/<job>                     Job
//   units/<job>/<unit>             Unit
//   judgments/<job>/<unit>/<wkr>   Judgment (one per worker and unit)
//   instances/<instance>           TaskInstance
//   reservations/<job>/<wkr>       {"instance_id"} for the live reservation
//   quality/<job>/<wkr>            WorkerQualityState
//   progress/<job>/<wkr>           {"claims", "judged": [unit ids]}
//   history/<wkr>/<job>            marker: worker judged in job
//   workers/<wkr>                  Worker
//   users/<id>, sessions/<token>   authentication
//   tx/<wkr>/<seq>                 ledger Transaction
//   rewards/<item>                 RewardItem (without codes)
//   codes/<item>/<code>            unissued code
//   issued/<item>/<code>           issued code marker
//   coupons/<wkr>/<coupon>         Coupon
//   idem/<principal>/<key>         stored response for an idempotency key
//   meta/<counter>                 id counters

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "crowdcafe/model.hpp"
#include "crowdcafe/quality.hpp"
#include "crowdcafe/storage.hpp"

namespace crowdcafe {

/// True for non-empty ids of [A-Za-z0-9._@-] up to 128 chars.
bool is_valid_id(std::string_view id);
void require_valid_id(std::string_view id, std::string_view what);
/// Instance ids are "<job>:<worker>:<n>".
bool is_valid_instance_id(std::string_view id);

/// Zero-padded decimal so lexical order follows numeric order.
std::string padded(std::uint64_t n, int width = 10);

namespace keys {
std::string job(std::string_view job);
std::string units(std::string_view job);
std::string unit(std::string_view job, std::string_view unit);
std::string unit_judgments(std::string_view job, std::string_view unit);
std::string job_judgments(std::string_view job);
std::string judgment(std::string_view job, std::string_view unit, std::string_view worker);
std::string instance(std::string_view id);
std::string reservation(std::string_view job, std::string_view worker);
std::string quality(std::string_view job, std::string_view worker);
std::string progress(std::string_view job, std::string_view worker);
std::string history(std::string_view worker);
std::string history(std::string_view worker, std::string_view job);
std::string worker(std::string_view worker);
}  // namespace keys

struct WorkerProgress {
  int claims = 0;
  std::set<std::string> judged;  // unit ids, gold included
};

class Repo {
 public:
  explicit Repo(StoreTxn& txn) : txn_(txn) {}

  std::optional<Job> find_job(std::string_view id);
  Job job(std::string_view id);  // not_found when missing
  void put(const Job& job);

  std::optional<Unit> find_unit(std::string_view job, std::string_view unit);
  Unit unit(std::string_view job, std::string_view unit);
  void put(const Unit& unit);
  std::vector<Unit> units(std::string_view job);

  std::optional<TaskInstance> find_instance(std::string_view id);
  void put(const TaskInstance& inst);

  std::optional<Judgment> find_judgment(std::string_view job, std::string_view unit, std::string_view worker);
  void put(const Judgment& j);
  std::vector<Judgment> unit_judgments(std::string_view job, std::string_view unit);

  WorkerQualityState quality(std::string_view job, std::string_view worker);
  void put(const WorkerQualityState& s);

  WorkerProgress progress(std::string_view job, std::string_view worker);
  void put_progress(std::string_view job, std::string_view worker, const WorkerProgress& p);

  std::optional<Worker> find_worker(std::string_view id);
  Worker worker(std::string_view id);
  void put(const Worker& w);

  /// Jobs the worker has judged in.
  std::set<std::string> history(std::string_view worker);
  void mark_history(std::string_view worker, std::string_view job);

  StoreTxn& txn() { return txn_; }

 private:
  StoreTxn& txn_;
};

}  // namespace crowdcafe
