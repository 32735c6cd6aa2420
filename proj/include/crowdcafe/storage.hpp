#pragma once

// Embedded transactional key/value store.
//
// Keys are "collection/part/part..." strings; values are JSON documents.
// Transactions use optimistic concurrency control with backward validation:
// a transaction records the keys it read and the prefixes it scanned, and at
// commit time is checked against every commit that happened after it began.
// Conflicts are retried with jittered backoff; after a few conflicts the
// transaction re-runs alone, which guarantees progress under contention.
//
// With a data directory, every commit is appended to a write-ahead log as a
// single JSON line before it becomes visible. Recovery replays the log and
// drops a torn trailing line, so a crash never exposes half a commit.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdcafe/error.hpp"

namespace crowdcafe {

using json = nlohmann::json;

struct Record {
  std::string key;
  json value;
};

class Store;

class StoreTxn {
 public:
  StoreTxn(const StoreTxn&) = delete;
  StoreTxn& operator=(const StoreTxn&) = delete;
  ~StoreTxn();

  /// Reads see this transaction's own writes.
  std::optional<json> read(std::string_view key);
  void write(std::string key, json value);
  void erase(std::string key);

  /// All live records under `prefix`, in insertion order, including
  /// uncommitted writes of this transaction.
  std::vector<Record> scan(std::string_view prefix);

  bool exists(std::string_view key) { return read(key).has_value(); }

 private:
  friend class Store;
  StoreTxn(Store& store, std::uint64_t start_seq) : store_(store), start_seq_(start_seq) {}

  Store& store_;
  std::uint64_t start_seq_;
  std::set<std::string, std::less<>> read_keys_;
  std::vector<std::string> scanned_prefixes_;
  // Pending writes in first-write order; nullopt marks a delete.
  std::vector<std::string> write_order_;
  std::unordered_map<std::string, std::optional<json>> writes_;
};

class Store {
 public:
  struct Options {
    std::optional<std::filesystem::path> data_dir;  // nullopt: in-memory
    bool sync = true;                               // fsync every commit
    int max_retries = 64;
    int exclusive_after = 4;  // conflicts before running alone
  };

  /// Opens (and recovers) the store. StorageUnavailable if the directory
  /// cannot be used.
  explicit Store(Options options);
  Store() : Store(Options{}) {}
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  /// Runs `body` until it commits. A body that throws is re-run if the
  /// throw came from reading inconsistent state; otherwise the exception
  /// propagates and nothing is written.
  template <typename F>
  auto transact(F&& body) -> std::invoke_result_t<F&, StoreTxn&>;

  std::optional<json> get(std::string_view key) const;

  /// Consistent snapshot of the records under `prefix`, in insertion order.
  std::vector<Record> list_by_prefix(std::string_view prefix,
                                     const std::function<bool(const json&)>& filter = {}) const;

  /// JSON-lines dump: {"collection":..,"key":..,"value":..} per record.
  void export_dump(std::ostream& out) const;
  /// Loads a dump produced by export_dump as one commit.
  std::size_t import_dump(std::istream& in);

  /// Rewrites the log as a compact snapshot.
  void compact();

  std::uint64_t commit_count() const;
  std::uint64_t conflict_count() const { return conflicts_.load(); }

 private:
  friend class StoreTxn;

  struct Entry {
    json value;
    std::uint64_t created = 0;
  };

  // Admission gate: shared for ordinary transactions, exclusive for the
  // contention fallback. Exclusive requests block new shared entrants.
  class Gate {
   public:
    void enter_shared();
    void leave_shared();
    void enter_exclusive();
    void leave_exclusive();

   private:
    std::mutex mu_;
    std::condition_variable cv_;
    int shared_ = 0;
    int waiting_exclusive_ = 0;
    bool exclusive_ = false;
  };

  std::uint64_t begin_txn();
  void end_txn(std::uint64_t start_seq);
  bool validate_locked(const StoreTxn& txn) const;
  bool validate(const StoreTxn& txn) const;
  bool commit(StoreTxn& txn);
  void apply_locked(const std::vector<std::pair<std::string, std::optional<json>>>& writes);
  void append_log(const std::vector<std::pair<std::string, std::optional<json>>>& writes, std::uint64_t seq);
  void recover();
  void backoff(int attempt);
  void trim_history_locked();

  Options options_;
  Gate gate_;

  mutable std::shared_mutex data_mu_;
  std::map<std::string, Entry, std::less<>> data_;
  std::uint64_t next_created_ = 1;

  mutable std::mutex commit_mu_;
  std::uint64_t commit_seq_ = 0;
  std::deque<std::pair<std::uint64_t, std::vector<std::string>>> history_;
  std::multiset<std::uint64_t> active_starts_;

  int log_fd_ = -1;
  std::atomic<std::uint64_t> conflicts_{0};
  std::mutex rng_mu_;
  std::minstd_rand jitter_{12345};
};

template <typename F>
auto Store::transact(F&& body) -> std::invoke_result_t<F&, StoreTxn&> {
  using R = std::invoke_result_t<F&, StoreTxn&>;
  for (int attempt = 0;; ++attempt) {
    if (attempt >= options_.max_retries) throw Error(Errc::retries_exhausted, std::to_string(attempt) + " attempts");
    {
      const bool exclusive = attempt >= options_.exclusive_after;
      if (exclusive) {
        gate_.enter_exclusive();
      } else {
        gate_.enter_shared();
      }
      struct Leave {
        Gate& g;
        bool ex;
        ~Leave() { ex ? g.leave_exclusive() : g.leave_shared(); }
      } leave{gate_, exclusive};

      StoreTxn txn(*this, begin_txn());
      try {
        if constexpr (std::is_void_v<R>) {
          body(txn);
          if (commit(txn)) return;
        } else {
          R result = body(txn);
          if (commit(txn)) return result;
        }
      } catch (...) {
        if (validate(txn)) throw;
      }
    }
    ++conflicts_;
    backoff(attempt);
  }
}

}  // namespace crowdcafe
