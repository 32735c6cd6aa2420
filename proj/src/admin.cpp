#include "crowdcafe/admin.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "crowdcafe/ingestion.hpp"
#include "crowdcafe/reports.hpp"
#include "crowdcafe/repository.hpp"
#include "crowdcafe/routing.hpp"

namespace crowdcafe::admin {

namespace {

[[noreturn]] void config_error(const YAML::Node& n, const std::string& what) {
  throw Error(Errc::config_error, "line " + std::to_string(n.Mark().line + 1) + ": " + what);
}

YAML::Node load_yaml(std::string_view text) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw Error(Errc::config_error, "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

json scalar_json(const YAML::Node& n) {
  const std::string& s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "null" || s == "~" || s == "Null" || s == "NULL") return nullptr;
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  std::int64_t i = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), i);
  if (ec == std::errc() && p == s.data() + s.size() && !s.empty()) return i;
  if (!s.empty()) {
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (end == s.c_str() + s.size() && s.find_first_of("0123456789") != std::string::npos &&
        s.find_first_not_of("0123456789+-.eE") == std::string::npos)
      return d;
  }
  return s;
}

json node_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Scalar: return scalar_json(n);
    case YAML::NodeType::Sequence: {
      json out = json::array();
      for (const auto& item : n) out.push_back(node_json(item));
      return out;
    }
    case YAML::NodeType::Map: {
      json out = json::object();
      for (const auto& kv : n) out[kv.first.Scalar()] = node_json(kv.second);
      return out;
    }
  }
  return nullptr;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::config_error, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string required_string(const YAML::Node& entry, const char* key) {
  const YAML::Node v = entry[key];
  if (!v || !v.IsScalar() || v.Scalar().empty()) config_error(entry, std::string("missing '") + key + "'");
  return v.Scalar();
}

Cents price_of(const YAML::Node& entry) {
  const YAML::Node v = entry["price"];
  if (!v) config_error(entry, "missing 'price'");
  try {
    if (v.IsScalar()) return parse_euros(v.Scalar());
    if (v.IsMap()) return node_json(v).get<Cents>();
  } catch (const Error& e) {
    config_error(v, e.what());
  }
  config_error(v, "price must be euros (\"0.60\") or {cents, currency}");
}

}  // namespace

json yaml_to_json(std::string_view text) { return node_json(load_yaml(text)); }

std::vector<std::string> read_code_csv(std::string_view bytes) {
  std::vector<CsvRecord> records;
  try {
    records = read_csv_records(bytes);
  } catch (const Error& e) {
    throw Error(Errc::config_error, e.what());
  }
  if (records.empty()) throw Error(Errc::config_error, "code file is empty");
  std::size_t col = records.front().fields.size();
  for (std::size_t i = 0; i < records.front().fields.size(); ++i)
    if (records.front().fields[i] == "code") col = i;
  if (col == records.front().fields.size()) throw Error(Errc::config_error, "line 1: no 'code' column");
  std::vector<std::string> codes;
  std::map<std::string, std::size_t> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (col >= rec.fields.size() || rec.fields[col].empty())
      throw Error(Errc::config_error, "line " + std::to_string(rec.line) + ": empty code");
    const std::string& code = rec.fields[col];
    if (auto [it, fresh] = seen.emplace(code, rec.line); !fresh)
      throw Error(Errc::config_error, "line " + std::to_string(rec.line) + ": duplicate code '" + code +
                                          "' (first on line " + std::to_string(it->second) + ")");
    codes.push_back(code);
  }
  return codes;
}

SeedConfig parse_seed(std::string_view yaml_text, const std::filesystem::path& base_dir) {
  const YAML::Node root = load_yaml(yaml_text);
  SeedConfig cfg;
  if (!root || root.IsNull()) return cfg;
  if (!root.IsMap()) config_error(root, "seed file must be a mapping with 'users' and/or 'rewards'");
  for (const auto& kv : root) {
    const std::string key = kv.first.Scalar();
    if (key != "users" && key != "rewards") config_error(kv.first, "unknown section '" + key + "'");
  }

  std::set<std::string> user_ids;
  if (const YAML::Node users = root["users"]) {
    if (!users.IsSequence()) config_error(users, "'users' must be a list");
    for (const auto& u : users) {
      if (!u.IsMap()) config_error(u, "user entry must be a mapping");
      SeedUser su;
      su.id = required_string(u, "id");
      if (!is_valid_id(su.id)) config_error(u, "invalid user id '" + su.id + "'");
      if (!user_ids.insert(su.id).second) config_error(u, "duplicate user '" + su.id + "'");
      try {
        su.role = parse_role(required_string(u, "role"));
      } catch (const Error& e) {
        config_error(u["role"], e.what());
      }
      su.password = required_string(u, "password");
      su.display_name = u["display_name"] ? u["display_name"].Scalar() : su.id;
      cfg.users.push_back(std::move(su));
    }
  }

  std::set<std::string> reward_ids;
  if (const YAML::Node rewards = root["rewards"]) {
    if (!rewards.IsSequence()) config_error(rewards, "'rewards' must be a list");
    for (const auto& r : rewards) {
      if (!r.IsMap()) config_error(r, "reward entry must be a mapping");
      SeedReward sr;
      sr.item.id = required_string(r, "id");
      if (!is_valid_id(sr.item.id)) config_error(r, "invalid reward id '" + sr.item.id + "'");
      if (!reward_ids.insert(sr.item.id).second) config_error(r, "duplicate reward '" + sr.item.id + "'");
      sr.item.title = r["title"] ? r["title"].Scalar() : sr.item.id;
      sr.item.venue = r["venue"] ? r["venue"].Scalar() : "";
      sr.item.price = price_of(r);
      if (sr.item.price.value < 0) config_error(r, "negative price");

      std::map<std::string, std::string> seen;  // code -> where
      if (const YAML::Node codes = r["codes"]) {
        if (!codes.IsSequence()) config_error(codes, "'codes' must be a list");
        for (const auto& c : codes) {
          if (!c.IsScalar() || c.Scalar().empty()) config_error(c, "code must be a non-empty string");
          const std::string where = "line " + std::to_string(c.Mark().line + 1);
          if (auto [it, fresh] = seen.emplace(c.Scalar(), where); !fresh)
            config_error(c, "duplicate code '" + c.Scalar() + "' (first on " + it->second + ")");
          if (!is_valid_id(c.Scalar())) config_error(c, "invalid code '" + c.Scalar() + "'");
          sr.codes.push_back(c.Scalar());
        }
      }
      if (const YAML::Node file = r["codes_file"]) {
        const std::filesystem::path path = base_dir / file.Scalar();
        std::vector<std::string> from_file;
        try {
          from_file = read_code_csv(read_file(path));
        } catch (const Error& e) {
          throw Error(Errc::config_error, path.string() + ": " + e.detail());
        }
        for (const auto& code : from_file) {
          if (auto [it, fresh] = seen.emplace(code, path.string()); !fresh)
            config_error(file, "duplicate code '" + code + "' in " + path.string() + " (also " + it->second + ")");
          if (!is_valid_id(code)) config_error(file, "invalid code '" + code + "' in " + path.string());
          sr.codes.push_back(code);
        }
      }
      cfg.rewards.push_back(std::move(sr));
    }
  }
  return cfg;
}

SeedSummary seed(Store& store, const SeedConfig& config, auth::HashStrength strength) {
  SeedSummary s;
  for (const auto& u : config.users) {
    store.transact([&](StoreTxn& txn) { auth::upsert_user(txn, u.id, u.role, u.display_name, u.password, strength); });
    ++s.users;
  }
  for (const auto& r : config.rewards) {
    const int added = store.transact([&](StoreTxn& txn) {
      ledger::upsert_reward(txn, r.item);
      return ledger::add_codes(txn, r.item.id, r.codes);
    });
    ++s.rewards;
    s.codes_added += added;
    s.codes_present += static_cast<int>(r.codes.size()) - added;
  }
  return s;
}

JobLoadResult load_job(Store& store, std::string_view config_text, const std::filesystem::path& base_dir,
                       const PlatformConfig& platform_config) {
  json cfg = yaml_to_json(config_text);
  if (!cfg.is_object()) throw Error(Errc::config_error, "job config must be a mapping");
  if (!cfg.contains("owner") || !cfg.at("owner").is_string()) throw Error(Errc::config_error, "missing 'owner'");
  const std::string owner = cfg.at("owner").get<std::string>();
  auto user = store.get("users/" + owner);
  if (!user) throw Error(Errc::config_error, "unknown owner '" + owner + "'");
  const Principal principal{owner, parse_role(user->at("role").get<std::string>())};

  const json data = cfg.value("data", json("none"));
  const json gold = cfg.value("gold", json::array());
  const bool publish = cfg.value("publish", true);
  for (const char* k : {"owner", "data", "gold", "publish"}) cfg.erase(k);

  FeedRegistry feeds;
  std::optional<FeedQuery> feed_query;
  if (data.is_object() && data.contains("feed")) {
    const json& f = data.at("feed");
    if (!f.contains("fixture")) throw Error(Errc::config_error, "feed data needs a 'fixture' path");
    feeds.add("fixture", std::make_shared<FixtureFeedAdapter>(base_dir / f.at("fixture").get<std::string>()));
    feed_query.emplace("fixture", f.at("hashtag").get<std::string>(), f.value("limit", 1000));
  }
  Platform platform(store, std::move(feeds), platform_config);

  JobLoadResult out;
  out.job = platform.create_job(principal, cfg);
  if (data.is_object() && data.contains("csv")) {
    out.data = platform.attach_csv(principal, out.job.id, read_file(base_dir / data.at("csv").get<std::string>()));
  } else if (feed_query) {
    out.data = platform.attach_feed(principal, out.job.id, *feed_query);
  } else if ((data.is_string() && data == "none") || (data.is_object() && data.value("survey", false))) {
    out.data = platform.attach_survey(principal, out.job.id);
  } else {
    throw Error(Errc::config_error, "data must be {csv}, {feed}, {survey: true} or \"none\"");
  }
  if (!gold.empty()) out.gold = platform.add_gold(principal, out.job.id, gold);
  out.job = publish ? platform.publish(principal, out.job.id) : platform.job(principal, out.job.id);
  return out;
}

int expire(Store& store, Timestamp now) {
  return store.transact([&](StoreTxn& txn) { return expire_reservations(txn, now); });
}

ExportKind parse_export_kind(std::string_view s) {
  if (s == "results") return ExportKind::Results;
  if (s == "judgments") return ExportKind::Judgments;
  if (s == "kappa") return ExportKind::Kappa;
  if (s == "stats") return ExportKind::Stats;
  throw Error(Errc::invalid_argument, "unknown export kind '" + std::string(s) + "'");
}

ExportFormat parse_export_format(std::string_view s) {
  if (s == "json") return ExportFormat::Json;
  if (s == "text") return ExportFormat::Text;
  if (s == "csv") return ExportFormat::Csv;
  throw Error(Errc::invalid_argument, "unknown export format '" + std::string(s) + "'");
}

void export_report(Store& store, ExportKind kind, std::string_view job_id, ExportFormat format,
                   const std::optional<std::string>& field, std::ostream& out) {
  const std::string text = store.transact([&](StoreTxn& txn) -> std::string {
    Repo repo(txn);
    auto job = repo.find_job(job_id);
    if (!job) throw Error(Errc::unknown_job, std::string(job_id));
    switch (kind) {
      case ExportKind::Results:
        if (format == ExportFormat::Csv) return reports::results_csv(txn, *job);
        if (format == ExportFormat::Json) return reports::results_json(txn, *job).dump(2) + "\n";
        break;
      case ExportKind::Judgments:
        if (format == ExportFormat::Csv) return reports::judgments_csv(txn, *job);
        if (format == ExportFormat::Json) return reports::results_json(txn, *job).at("judgments").dump(2) + "\n";
        break;
      case ExportKind::Kappa:
      case ExportKind::Stats: {
        const json report = kind == ExportKind::Kappa ? reports::kappa_json(txn, *job, field) : reports::stats_json(txn, *job);
        if (format == ExportFormat::Json) return report.dump(2) + "\n";
        if (format == ExportFormat::Text) return reports::to_text(report);
        break;
      }
    }
    throw Error(Errc::invalid_argument, "this export is not available in the requested format");
  });
  out << text;
}

}  // namespace crowdcafe::admin
