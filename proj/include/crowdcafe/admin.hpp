#pragma once

// Operator tasks: seeding users and reward pools, loading jobs from config
// files, expiring reservations and exporting reports.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crowdcafe/auth.hpp"
#include "crowdcafe/ledger.hpp"
#include "crowdcafe/platform.hpp"

namespace crowdcafe::admin {

/// YAML (or JSON) text to JSON. Plain scalars become numbers, booleans or
/// null where they parse as such; quoted scalars stay strings. Parse errors
/// are config_error with a line number.
json yaml_to_json(std::string_view text);

struct SeedUser {
  std::string id;
  Role role = Role::Worker;
  std::string display_name;
  std::string password;
};

struct SeedReward {
  RewardItem item;
  std::vector<std::string> codes;
};

struct SeedConfig {
  std::vector<SeedUser> users;
  std::vector<SeedReward> rewards;
};

/// Errors: config_error("line N: ...") for malformed entries and for a code
/// listed twice. `base_dir` resolves codes_file paths.
SeedConfig parse_seed(std::string_view yaml_text, const std::filesystem::path& base_dir = ".");

/// Codes from a CSV with a "code" column. Duplicates are config_error with
/// the offending line.
std::vector<std::string> read_code_csv(std::string_view bytes);

struct SeedSummary {
  int users = 0;
  int rewards = 0;
  int codes_added = 0;
  int codes_present = 0;  // already pooled or issued
};

/// Idempotent upsert of users, reward items and code pools.
SeedSummary seed(Store& store, const SeedConfig& config,
                 auth::HashStrength strength = auth::HashStrength::Interactive);

struct JobLoadResult {
  Job job;
  json data;  // {"units", "instances"}
  int gold = 0;
};

/// Config: the Kitchen job JSON plus "owner" (requestor id), "data"
/// ({"csv": path} | {"feed": {"fixture": path, "hashtag", "limit"}} |
/// {"survey": true} | "none"), optional "gold" entries and "publish"
/// (default true). Paths resolve against `base_dir`.
JobLoadResult load_job(Store& store, std::string_view config_text, const std::filesystem::path& base_dir,
                       const PlatformConfig& platform_config = {});

int expire(Store& store, Timestamp now);

enum class ExportKind { Results, Judgments, Kappa, Stats };
enum class ExportFormat { Json, Text, Csv };

ExportKind parse_export_kind(std::string_view s);
ExportFormat parse_export_format(std::string_view s);

/// Errors: UnknownJob; invalid_argument for unsupported kind/format pairs.
void export_report(Store& store, ExportKind kind, std::string_view job_id, ExportFormat format,
                   const std::optional<std::string>& field, std::ostream& out);

}  // namespace crowdcafe::admin
