#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "crowdcafe/platform.hpp"
#include "crowdcafe/repository.hpp"
#include "crowdcafe/simulator.hpp"

namespace testing_support {

using namespace crowdcafe;

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(FIXTURE_DIR) / name; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "crowdcafe-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline const Principal kKitchen{"kitchen", Role::Requestor};

// Fixed clock that tests move by hand.
struct ManualClock {
  std::shared_ptr<std::atomic<std::int64_t>> t = std::make_shared<std::atomic<std::int64_t>>(1399885200000);
  Clock fn() const {
    auto p = t;
    return [p] { return Timestamp{p->load()}; };
  }
  void advance(double seconds) { *t += static_cast<std::int64_t>(seconds * 1000.0); }
};

inline FeedRegistry fixture_feeds() {
  FeedRegistry r;
  r.add("fixture", std::make_shared<FixtureFeedAdapter>(fixture("feed.json")));
  return r;
}

inline json tagging_draft(int min_judgments = 3, int mistake_limit = 0, const std::string& category = "Cappuccino") {
  return json{{"title", "Tag pictures of Trento"},
              {"instructions", "Give at least three tags for each picture."},
              {"category", category},
              {"batch_size", 3},
              {"min_judgments", min_judgments},
              {"reward", "0.03"},
              {"ui_template_ref", "builtin:tags"},
              {"fields", json::array({{{"name", "tags"}, {"kind", "list"}}})},
              {"similarity", {{"tags", {{"rule", "set_jaccard"}, {"threshold", 0.5}, {"fold_case", true}}}}},
              {"mistake_limit", mistake_limit}};
}

inline json relation_draft(int batch_size = 3) {
  return json{{"title", "Relation between sentences"},
              {"instructions", "Do the two sentences agree?"},
              {"category", "Espresso"},
              {"batch_size", batch_size},
              {"min_judgments", 3},
              {"reward", "0.03"},
              {"ui_template_ref", "builtin:relation"},
              {"fields", json::array({{{"name", "relation"}, {"kind", "text"}}})},
              {"mistake_limit", 0}};
}

// Gold entries answered with simulated_truth so that an accurate simulated
// worker passes them.
inline json truth_gold(const Job& job, int n) {
  json out = json::array();
  for (int i = 0; i < n; ++i) {
    Payload p{{"media_url", "https://media.example.org/gold/" + std::to_string(i) + ".jpg"}};
    out.push_back({{"payload", p}, {"answers", value_map_json(simulated_truth(job, p))}});
  }
  return out;
}

// Creates, fills (231 feed items), seeds with gold and publishes a tagging job.
inline std::string publish_trento(Platform& platform, int gold = 10, int min_judgments = 3, int mistake_limit = 0) {
  const Job job = platform.create_job(kKitchen, tagging_draft(min_judgments, mistake_limit));
  platform.attach_feed(kKitchen, job.id, FeedQuery("fixture", "#trento", 231));
  if (gold > 0) platform.add_gold(kKitchen, job.id, truth_gold(job, gold));
  platform.publish(kKitchen, job.id);
  return job.id;
}

inline void add_worker(Store& store, const std::string& id, const std::string& password = "pw") {
  store.transact([&](StoreTxn& txn) { auth::upsert_user(txn, id, Role::Worker, id, password, auth::HashStrength::Minimal); });
}

}  // namespace testing_support
