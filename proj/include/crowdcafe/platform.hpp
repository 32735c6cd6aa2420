#pragma once

// Request-level operations behind the HTTP service: authorisation checks,
// one store transaction per operation, and the worker-safe JSON views.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "crowdcafe/auth.hpp"
#include "crowdcafe/ingestion.hpp"
#include "crowdcafe/ledger.hpp"
#include "crowdcafe/routing.hpp"
#include "crowdcafe/storage.hpp"

namespace crowdcafe {

struct Principal {
  std::string id;
  Role role = Role::Worker;
};

struct PlatformConfig {
  ReservationPolicy reservation;
  int session_ttl_seconds = 86400;
  std::uint64_t seed = 0;
  // Relative template refs resolve under this directory.
  std::filesystem::path template_dir = ".";
  bool fetch_remote_templates = true;
};

struct Page {
  std::size_t limit = 50;
  std::size_t offset = 0;
};

class Platform {
 public:
  Platform(Store& store, FeedRegistry feeds, PlatformConfig config, Clock clock = system_now);

  Store& store() { return store_; }
  const PlatformConfig& config() const { return config_; }
  Timestamp now() const { return clock_(); }

  Session login(std::string_view user, std::string_view password);
  /// Errors: unauthorized.
  Principal authenticate(std::string_view token) const;
  void logout(std::string_view token);

  // Kitchen (requestor or admin)
  Job create_job(const Principal& p, const json& draft);
  json attach_csv(const Principal& p, std::string_view job_id, std::string_view csv_bytes);
  json attach_feed(const Principal& p, std::string_view job_id, const FeedQuery& query);
  json attach_survey(const Principal& p, std::string_view job_id);
  /// entries: [{"unit_id": id, "answers": {...}}] or [{"payload": {...}, "answers": {...}}].
  int add_gold(const Principal& p, std::string_view job_id, const json& entries);
  Job publish(const Principal& p, std::string_view job_id);
  Job close(const Principal& p, std::string_view job_id);
  Job job(const Principal& p, std::string_view job_id);
  json results(const Principal& p, std::string_view job_id);
  std::string results_csv(const Principal& p, std::string_view job_id);

  // Cafe (worker). Mutating calls accept an idempotency key: a retry with
  // the same key returns the stored response instead of acting twice.
  json categories(const Principal& p);
  json list_jobs(const Principal& p, Category category, Page page);
  json claim(const Principal& p, std::string_view job_id, const std::optional<std::string>& idem_key = {});
  json submit(const Principal& p, std::string_view instance_id, const json& body,
              const std::optional<std::string>& idem_key = {});
  std::string render(const Principal& p, std::string_view instance_id);
  json rewards(const Principal& p);
  json purchase(const Principal& p, std::string_view reward_id, const std::optional<std::string>& idem_key = {});
  json transactions(const Principal& p, Page page);

  int expire_reservations();

  /// Worker-facing instance view; never carries gold information.
  static json instance_view(const Job& job, const TaskInstance& inst, const std::vector<Unit>& units);

 private:
  std::string load_template(const Job& job) const;

  Store& store_;
  FeedRegistry feeds_;
  PlatformConfig config_;
  Clock clock_;
};

/// Parses "answers" ({unit: {field: value}}) and "context" from a submit body.
std::map<std::string, ValueMap> parse_answers(const json& body, ContextLabel& context);

}  // namespace crowdcafe
