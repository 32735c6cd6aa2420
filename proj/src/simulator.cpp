#include "crowdcafe/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <queue>
#include <set>
#include <thread>
#include <tuple>
#include <cstdio>
#include <optional>

#include <httplib.h>

#include "crowdcafe/repository.hpp"
#include "crowdcafe/service.hpp"

namespace crowdcafe {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json to_json(const SimReport& r) {
  return json{{"workers", r.workers},
              {"claims", r.claims},
              {"submissions", r.submissions},
              {"judgments", r.judgments},
              {"bans", r.bans},
              {"expired", r.expired},
              {"units_total", r.units_total},
              {"units_finalized", r.units_finalized},
              {"units_no_agreement", r.units_no_agreement},
              {"min_counted_judgments", r.min_counted_judgments},
              {"coverage_ok", r.coverage_ok},
              {"duplicate_judgments", r.duplicate_judgments},
              {"payouts", r.payouts},
              {"conservation_ok", r.conservation_ok},
              {"hash", r.hash}};
}

namespace {

constexpr int kLabels = 5;
constexpr int kTagPool = 40;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return splitmix64(state_); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  int below(int n) { return static_cast<int>(uniform() * n); }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::uint64_t state_;
};

std::uint64_t unit_hash(const std::string& field, const Payload& payload) {
  return fnv1a64(field + "\n" + json(payload).dump());
}

Value wrong_answer(const AnswerField& f, const Value& truth, Rng& rng) {
  switch (f.kind) {
    case ValueKind::Text: {
      const int t = std::stoi(truth.text().substr(1));
      return "c" + std::to_string((t + 1 + rng.below(kLabels - 1)) % kLabels);
    }
    case ValueKind::Number: return truth.number() + 1 + rng.below(9);
    case ValueKind::List: {
      Value::List tags;
      while (tags.size() < 3) {
        std::string t = "noise" + std::to_string(rng.below(1000));
        if (std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(std::move(t));
      }
      return tags;
    }
  }
  return truth;
}

struct Http {
  explicit Http(int port) : client("127.0.0.1", port) {
    client.set_keep_alive(true);
    client.set_tcp_nodelay(true);
    client.set_read_timeout(60);
  }

  struct Reply {
    int status = 0;
    json body;
  };

  Reply call(const std::string& method, const std::string& path, const std::string& token, const json* body = nullptr,
             const std::string& idem = {}) {
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    if (!idem.empty()) headers.emplace("Idempotency-Key", idem);
    httplib::Result res = method == "GET"
                              ? client.Get(path, headers)
                              : client.Post(path, headers, body ? body->dump() : std::string(), "application/json");
    if (!res) throw Error(Errc::storage_unavailable, "service unreachable: " + httplib::to_string(res.error()));
    Reply r{res->status, json()};
    if (!res->body.empty() && res->get_header_value("Content-Type").find("json") != std::string::npos)
      r.body = json::parse(res->body);
    return r;
  }

  httplib::Client client;
};

struct SimWorker {
  std::string id;
  std::string token;
  Rng rng{0};
  json instance;  // current claim, null when idle
  bool done = false;
  int claims = 0;
  int refusals = 0;
  Cents credited;
  std::string idem_prefix;
};

struct Event {
  std::int64_t at;
  std::size_t worker;
  bool operator>(const Event& o) const { return std::tie(at, worker) > std::tie(o.at, o.worker); }
};

struct Tally {
  std::mutex mu;
  SimReport report;
};

// One worker step: claim when idle, submit when holding an instance. Returns
// the delay until the worker's next step, or nullopt when it is finished.
std::optional<double> step(SimWorker& w, Http& http, const SimConfig& cfg, Tally& tally) {
  if (w.instance.is_null()) {
    std::string job_id = cfg.job_id;
    if (job_id.empty()) {
      for (Category c : kAllCategories) {
        auto r = http.call("GET", "/cafe/jobs?category=" + std::string(to_string(c)) + "&limit=1", w.token);
        if (r.status == 200 && !r.body.at("items").empty()) {
          job_id = r.body.at("items")[0].at("id").get<std::string>();
          break;
        }
      }
      if (job_id.empty()) return std::nullopt;
    }
    auto r = http.call("POST", "/cafe/jobs/" + job_id + "/claim", w.token, nullptr,
                       w.idem_prefix + "claim-" + std::to_string(w.claims + 1));
    if (r.status != 200) {
      // A fixed job or repeated refusals mean this worker is finished.
      if (!cfg.job_id.empty() || ++w.refusals >= 3) return std::nullopt;
      return cfg.think_seconds;
    }
    w.refusals = 0;
    ++w.claims;
    w.instance = r.body;
    {
      std::lock_guard lock(tally.mu);
      ++tally.report.claims;
    }
    const Category category = parse_category(w.instance.at("category").get<std::string>());
    const double median = nominal_duration_seconds(category) * cfg.duration_scale;
    return std::max(1.0, median * std::exp(cfg.duration_sigma * w.rng.normal()));
  }

  Job shape;
  shape.fields = w.instance.at("fields").get<std::vector<AnswerField>>();
  json answers = json::object();
  for (const auto& u : w.instance.at("units")) {
    const Payload payload = u.at("payload").get<Payload>();
    const ValueMap truth = simulated_truth(shape, payload);
    json values = json::object();
    for (const auto& f : shape.fields) {
      const Value& t = truth.at(f.name);
      values[f.name] = w.rng.uniform() < cfg.accuracy ? t : wrong_answer(f, t, w.rng);
    }
    answers[u.at("id").get<std::string>()] = values;
  }
  static constexpr ContextLabel kContexts[] = {ContextLabel::home, ContextLabel::workplace, ContextLabel::bus,
                                               ContextLabel::unspecified};
  const json body{{"answers", answers}, {"context", to_string(kContexts[w.rng.below(4)])}};
  const std::string id = w.instance.at("id").get<std::string>();
  auto r = http.call("POST", "/cafe/instances/" + id + "/submit", w.token, &body,
                     w.idem_prefix + "submit-" + std::to_string(w.claims));
  const std::size_t n_units = w.instance.at("units").size();
  w.instance = nullptr;
  std::lock_guard lock(tally.mu);
  if (r.status == 410) {
    ++tally.report.expired;
    return cfg.think_seconds;
  }
  if (r.status != 200) throw Error(Errc::conflict, "simulated submit failed: " + r.body.dump());
  ++tally.report.submissions;
  tally.report.judgments += static_cast<int>(n_units);
  w.credited = w.credited + r.body.at("credited").get<Cents>();
  if (r.body.at("banned").get<bool>()) {
    ++tally.report.bans;
    return std::nullopt;
  }
  return cfg.think_seconds * (0.5 + w.rng.uniform());
}

void run_group(std::vector<SimWorker*> group, int port, const SimConfig& cfg, std::atomic<std::int64_t>& clock,
               Tally& tally, bool advance_shared) {
  Http http(port);
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double offset = group[i]->rng.uniform() * 60.0;
    queue.push({cfg.start.plus_seconds(offset).millis, i});
  }
  while (!queue.empty()) {
    const Event e = queue.top();
    queue.pop();
    if (advance_shared) {
      std::int64_t cur = clock.load();
      while (cur < e.at && !clock.compare_exchange_weak(cur, e.at)) {
      }
    } else {
      clock.store(e.at);
    }
    SimWorker& w = *group[e.worker];
    if (auto delay = step(w, http, cfg, tally)) {
      queue.push({Timestamp{e.at}.plus_seconds(*delay).millis, e.worker});
    } else {
      w.done = true;
    }
  }
}

}  // namespace

ValueMap simulated_truth(const Job& job, const Payload& payload) {
  ValueMap out;
  for (const auto& f : job.fields) {
    const std::uint64_t h = unit_hash(f.name, payload);
    switch (f.kind) {
      case ValueKind::Text: out[f.name] = "c" + std::to_string(h % kLabels); break;
      case ValueKind::Number: out[f.name] = static_cast<double>(h % 100); break;
      case ValueKind::List: {
        Value::List tags;
        std::uint64_t s = h;
        while (tags.size() < 3) {
          std::string t = "tag" + std::to_string(splitmix64(s) % kTagPool);
          if (std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(std::move(t));
        }
        out[f.name] = tags;
        break;
      }
    }
  }
  return out;
}

SimReport simulate(Store& store, const SimConfig& cfg, PlatformConfig platform_config) {
  if (cfg.workers < 1) throw Error(Errc::invalid_argument, "workers must be >= 1");
  if (cfg.parallelism < 1) throw Error(Errc::invalid_argument, "parallelism must be >= 1");
  if (cfg.accuracy < 0 || cfg.accuracy > 1) throw Error(Errc::invalid_argument, "accuracy must be in [0, 1]");

  std::vector<Job> jobs;
  for (const auto& r : store.list_by_prefix("jobs/")) {
    Job j = r.value.get<Job>();
    if (j.status == JobStatus::Published && (cfg.job_id.empty() || j.id == cfg.job_id)) jobs.push_back(std::move(j));
  }
  if (jobs.empty()) throw Error(Errc::no_published_jobs, cfg.job_id);

  // Operator-side setup: simulated accounts and an auditor for the checks.
  const std::string auditor = cfg.worker_prefix + "auditor";
  // Idempotency keys must not collide with an earlier run on the same store.
  const std::string idem_prefix = "sim" + std::to_string(store.commit_count()) + "-";
  std::vector<SimWorker> workers(static_cast<std::size_t>(cfg.workers));
  for (std::size_t i = 0; i < workers.size(); ++i) {
    workers[i].id = cfg.worker_prefix + padded(i + 1, 3);
    std::uint64_t s = cfg.seed ^ (0x9E3779B97F4A7C15ULL * (i + 1));
    workers[i].rng = Rng(splitmix64(s));
    workers[i].idem_prefix = idem_prefix;
    store.transact([&](StoreTxn& txn) {
      auth::upsert_user(txn, workers[i].id, Role::Worker, workers[i].id, "simulated", auth::HashStrength::Minimal);
    });
  }
  store.transact([&](StoreTxn& txn) {
    auth::upsert_user(txn, auditor, Role::Admin, auditor, "simulated", auth::HashStrength::Minimal);
  });

  std::atomic<std::int64_t> clock{cfg.start.millis};
  platform_config.seed = cfg.seed;
  Platform platform(store, FeedRegistry{}, platform_config, [&clock] { return Timestamp{clock.load()}; });
  Service service(platform);
  const int port = service.start("127.0.0.1", 0);

  Tally tally;
  Http http(port);
  auto login = [&](const std::string& user) {
    const json body{{"user", user}, {"password", "simulated"}};
    auto r = http.call("POST", "/auth/login", "", &body);
    if (r.status != 200) throw Error(Errc::unauthorized, "simulated login failed for " + user);
    return r.body.at("token").get<std::string>();
  };
  for (auto& w : workers) w.token = login(w.id);
  const std::string audit_token = login(auditor);

  if (cfg.parallelism == 1) {
    std::vector<SimWorker*> all;
    for (auto& w : workers) all.push_back(&w);
    run_group(all, port, cfg, clock, tally, false);
  } else {
    std::vector<std::vector<SimWorker*>> groups(static_cast<std::size_t>(cfg.parallelism));
    for (std::size_t i = 0; i < workers.size(); ++i) groups[i % groups.size()].push_back(&workers[i]);
    std::vector<std::thread> threads;
    std::exception_ptr failure;
    std::mutex failure_mu;
    for (auto& g : groups) {
      threads.emplace_back([&, g] {
        try {
          run_group(g, port, cfg, clock, tally, true);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  SimReport& rep = tally.report;
  rep.workers = cfg.workers;

  // Audit through the requestor-facing results.
  rep.coverage_ok = true;
  rep.min_counted_judgments = -1;
  for (const auto& job : jobs) {
    auto r = http.call("GET", "/kitchen/jobs/" + job.id + "/results", audit_token);
    if (r.status != 200) throw Error(Errc::conflict, "results unavailable: " + r.body.dump());
    std::set<std::pair<std::string, std::string>> seen;
    std::map<std::string, int> counted;
    for (const auto& j : r.body.at("judgments")) {
      if (!seen.emplace(j.at("worker_id").get<std::string>(), j.at("unit_id").get<std::string>()).second)
        ++rep.duplicate_judgments;
      if (!j.at("flagged").get<bool>()) ++counted[j.at("unit_id").get<std::string>()];
    }
    for (const auto& u : r.body.at("units")) {
      if (u.at("gold").get<bool>()) continue;
      ++rep.units_total;
      const std::string status = u.at("status").get<std::string>();
      if (status != "Pending") ++rep.units_finalized;
      if (status == "NoAgreement") ++rep.units_no_agreement;
      const int n = counted[u.at("id").get<std::string>()];
      if (rep.min_counted_judgments < 0 || n < rep.min_counted_judgments) rep.min_counted_judgments = n;
      if (job.input_source != "survey" && n < job.min_judgments) rep.coverage_ok = false;
    }
  }
  if (rep.min_counted_judgments < 0) rep.min_counted_judgments = 0;

  rep.conservation_ok = true;
  for (const auto& w : workers) {
    Cents sum{0};
    Cents balance{0};
    std::size_t offset = 0;
    while (true) {
      auto r = http.call("GET", "/cafe/transactions?limit=500&offset=" + std::to_string(offset), w.token);
      if (r.status != 200) throw Error(Errc::conflict, "transactions unavailable: " + r.body.dump());
      balance = r.body.at("balance").get<Cents>();
      for (const auto& t : r.body.at("items")) sum = sum + t.at("amount").get<Cents>();
      offset += r.body.at("items").size();
      if (offset >= r.body.at("total").get<std::size_t>()) break;
    }
    if (sum != balance || balance != w.credited || balance.value < 0) rep.conservation_ok = false;
    rep.payouts = rep.payouts + balance;
  }

  service.stop();
  json body = to_json(rep);
  body.erase("hash");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(body.dump())));
  rep.hash = buf;
  return rep;
}

}  // namespace crowdcafe
