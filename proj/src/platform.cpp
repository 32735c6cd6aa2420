#include "crowdcafe/platform.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>

#include "crowdcafe/quality.hpp"
#include "crowdcafe/reports.hpp"
#include "crowdcafe/repository.hpp"
#include "crowdcafe/templating.hpp"

namespace crowdcafe {

namespace {

void require_role(const Principal& p, std::initializer_list<Role> roles) {
  for (Role r : roles)
    if (p.role == r) return;
  throw Error(Errc::forbidden, std::string(to_string(p.role)) + " may not do this");
}

void require_kitchen(const Principal& p) { require_role(p, {Role::Requestor, Role::Admin}); }
void require_cafe(const Principal& p) { require_role(p, {Role::Worker}); }

Job owned_job(Repo& repo, const Principal& p, std::string_view job_id) {
  require_kitchen(p);
  auto job = repo.find_job(job_id);
  if (!job) throw Error(Errc::not_found, "job " + std::string(job_id));
  if (p.role != Role::Admin && job->owner_id != p.id) throw Error(Errc::forbidden, "job " + job->id + " belongs to another requestor");
  return std::move(*job);
}

Job draft_without_data(Repo& repo, const Principal& p, std::string_view job_id) {
  Job job = owned_job(repo, p, job_id);
  if (job.status != JobStatus::Draft) throw Error(Errc::conflict, "job " + job.id + " is " + std::string(to_string(job.status)));
  if (!job.input_source.empty()) throw Error(Errc::conflict, "job " + job.id + " already has data");
  return job;
}

std::uint64_t next_counter(StoreTxn& txn, const std::string& name) {
  const std::string key = "meta/" + name;
  std::uint64_t n = 1;
  if (auto v = txn.read(key)) n = v->get<std::uint64_t>() + 1;
  txn.write(key, n);
  return n;
}

std::string unit_id(std::size_t n) { return "u" + padded(n, 6); }

json store_units(StoreTxn& txn, Job job, const std::vector<Payload>& rows, std::string source) {
  if (rows.empty()) throw Error(Errc::invalid_argument, "input data has no rows");
  Repo repo(txn);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Unit u;
    u.id = unit_id(i + 1);
    u.job_id = job.id;
    u.payload = rows[i];
    repo.put(u);
  }
  job.input_source = std::move(source);
  repo.put(job);
  const BatchPlan plan = batch_units(rows.size(), static_cast<std::size_t>(job.batch_size));
  return json{{"units", rows.size()}, {"instances", plan.instances}};
}

ValueMap checked_answers(const Job& job, const json& answers) {
  if (!answers.is_object()) throw Error(Errc::invalid_argument, "answers must be an object");
  ValueMap values = value_map_from_json(answers);
  for (const auto& [name, v] : values) {
    const AnswerField* f = job.field(name);
    if (!f) throw Error(Errc::invalid_argument, "undeclared field '" + name + "'");
    if (v.kind() != f->kind) throw Error(Errc::kind_mismatch, "field '" + name + "' expects " + std::string(to_string(f->kind)));
  }
  for (const auto& f : job.fields)
    if (f.required && !values.count(f.name)) throw Error(Errc::missing_answer_field, f.name);
  return values;
}

std::string fingerprint(std::string_view op, std::string_view target, const json& body = nullptr) {
  return std::string(op) + " " + std::string(target) + " " + body.dump();
}

// Runs `op` once per (principal, key): the stored response is replayed for a
// repeated key, in the same transaction that would have performed the work.
template <typename F>
json idempotent(StoreTxn& txn, const Principal& p, const std::optional<std::string>& key, const std::string& print,
                F&& op) {
  if (!key) return op(txn);
  require_valid_id(*key, "idempotency key");
  const std::string k = "idem/" + p.id + "/" + *key;
  if (auto stored = txn.read(k)) {
    if (stored->at("request").get<std::string>() != print)
      throw Error(Errc::conflict, "idempotency key reused for a different request");
    return stored->at("response");
  }
  json response = op(txn);
  txn.write(k, json{{"request", print}, {"response", response}});
  return response;
}

json money(Cents c) { return c; }

}  // namespace

Platform::Platform(Store& store, FeedRegistry feeds, PlatformConfig config, Clock clock)
    : store_(store), feeds_(std::move(feeds)), config_(std::move(config)), clock_(std::move(clock)) {
  if (config_.reservation.ttl_seconds <= 0) throw Error(Errc::invalid_argument, "reservation ttl must be > 0");
  if (config_.session_ttl_seconds <= 0) throw Error(Errc::invalid_argument, "session ttl must be > 0");
}

Session Platform::login(std::string_view user, std::string_view password) {
  return auth::login(store_, user, password, now(), config_.session_ttl_seconds);
}

Principal Platform::authenticate(std::string_view token) const {
  auto s = auth::authenticate(store_, token, now());
  if (!s) throw Error(Errc::unauthorized, "missing or expired session");
  return Principal{s->principal, s->role};
}

void Platform::logout(std::string_view token) { auth::logout(store_, token); }

// ---------------------------------------------------------------- kitchen

Job Platform::create_job(const Principal& p, const json& draft) {
  require_kitchen(p);
  Job job = draft.get<Job>();
  job.owner_id = p.id;
  job.status = JobStatus::Draft;
  job.input_source.clear();
  return store_.transact([&](StoreTxn& txn) {
    Repo repo(txn);
    Job j = job;
    if (j.id.empty()) {
      do {
        j.id = "job-" + std::to_string(next_counter(txn, "job_seq"));
      } while (repo.find_job(j.id));
    } else {
      require_valid_id(j.id, "job id");
      if (repo.find_job(j.id)) throw Error(Errc::conflict, "job " + j.id + " exists");
    }
    Job valid = validate_job(j, [&](const std::string& id) { return id != j.id && repo.find_job(id).has_value(); }).job();
    repo.put(valid);
    return valid;
  });
}

json Platform::attach_csv(const Principal& p, std::string_view job_id, std::string_view csv_bytes) {
  const auto rows = parse_csv(csv_bytes);
  return store_.transact([&](StoreTxn& txn) {
    Repo repo(txn);
    return store_units(txn, draft_without_data(repo, p, job_id), rows, "csv");
  });
}

json Platform::attach_feed(const Principal& p, std::string_view job_id, const FeedQuery& query) {
  store_.transact([&](StoreTxn& txn) {
    Repo repo(txn);
    draft_without_data(repo, p, job_id);
  });
  const auto rows = fetch_feed(feeds_, query);
  return store_.transact([&](StoreTxn& txn) {
    Repo repo(txn);
    return store_units(txn, draft_without_data(repo, p, job_id), rows, "feed");
  });
}

json Platform::attach_survey(const Principal& p, std::string_view job_id) {
  return store_.transact([&](StoreTxn& txn) {
    Repo repo(txn);
    Job job = draft_without_data(repo, p, job_id);
    Unit u;
    u.id = "survey";
    u.job_id = job.id;
    repo.put(u);
    job.input_source = "survey";
    repo.put(job);
    return json{{"units", 1}, {"instances", 1}};
  });
}

int Platform::add_gold(const Principal& p, std::string_view job_id, const json& entries) {
  if (!entries.is_array()) throw Error(Errc::invalid_argument, "gold must be an array");
  return store_.transact([&](StoreTxn& txn) {
    Repo repo(txn);
    const Job job = owned_job(repo, p, job_id);
    if (job.status != JobStatus::Draft) throw Error(Errc::conflict, "gold can only be added to a draft job");
    if (job.input_source.empty()) throw Error(Errc::conflict, "job " + job.id + " has no data yet");
    if (job.input_source == "survey") throw Error(Errc::invalid_argument, "survey jobs take no gold");
    std::size_t next_new = repo.units(job.id).size();
    int count = 0;
    for (const auto& e : entries) {
      if (!e.is_object() || !e.contains("answers")) throw Error(Errc::invalid_argument, "gold entry needs answers");
      ValueMap answers = checked_answers(job, e.at("answers"));
      Unit u;
      if (e.contains("unit_id")) {
        const std::string id = e.at("unit_id").get<std::string>();
        auto found = repo.find_unit(job.id, id);
        if (!found) throw Error(Errc::invalid_argument, "unknown unit '" + id + "'");
        u = std::move(*found);
      } else if (e.contains("payload")) {
        u.id = unit_id(++next_new);
        u.job_id = job.id;
        u.payload = e.at("payload").get<Payload>();
      } else {
        throw Error(Errc::invalid_argument, "gold entry needs unit_id or payload");
      }
      u.gold = std::move(answers);
      repo.put(u);
      ++count;
    }
    return count;
  });
}

Job Platform::publish(const Principal& p, std::string_view job_id) {
  return store_.transact([&](StoreTxn& txn) {
    Repo repo(txn);
    Job job = owned_job(repo, p, job_id);
    if (job.status != JobStatus::Draft) throw Error(Errc::conflict, "job " + job.id + " is already " + std::string(to_string(job.status)));
    if (job.input_source.empty()) throw Error(Errc::conflict, "job " + job.id + " has no data");
    bool regular = false;
    for (const auto& u : repo.units(job.id)) regular = regular || !u.is_gold();
    if (!regular) throw Error(Errc::conflict, "job " + job.id + " has only gold units");
    job.status = JobStatus::Published;
    repo.put(job);
    return job;
  });
}

Job Platform::close(const Principal& p, std::string_view job_id) {
  return store_.transact([&](StoreTxn& txn) {
    Repo repo(txn);
    Job job = owned_job(repo, p, job_id);
    if (job.status == JobStatus::Closed) throw Error(Errc::conflict, "job " + job.id + " is already Closed");
    job.status = JobStatus::Closed;
    repo.put(job);
    return job;
  });
}

Job Platform::job(const Principal& p, std::string_view job_id) {
  return store_.transact([&](StoreTxn& txn) {
    Repo repo(txn);
    return owned_job(repo, p, job_id);
  });
}

json Platform::results(const Principal& p, std::string_view job_id) {
  return store_.transact([&](StoreTxn& txn) {
    Repo repo(txn);
    return reports::results_json(txn, owned_job(repo, p, job_id));
  });
}

std::string Platform::results_csv(const Principal& p, std::string_view job_id) {
  return store_.transact([&](StoreTxn& txn) {
    Repo repo(txn);
    return reports::results_csv(txn, owned_job(repo, p, job_id));
  });
}

// ---------------------------------------------------------------- cafe

json Platform::categories(const Principal& p) {
  require_cafe(p);
  return store_.transact([&](StoreTxn& txn) {
    json out = json::array();
    for (Category c : kAllCategories) {
      const auto jobs = list_available(txn, p.id, c);
      out.push_back({{"category", to_string(c)},
                     {"nominal_duration_seconds", nominal_duration_seconds(c)},
                     {"jobs", jobs.size()}});
    }
    return out;
  });
}

json Platform::list_jobs(const Principal& p, Category category, Page page) {
  require_cafe(p);
  if (page.limit == 0 || page.limit > 500) throw Error(Errc::invalid_argument, "limit must be in 1..500");
  return store_.transact([&](StoreTxn& txn) {
    const auto jobs = list_available(txn, p.id, category);
    json items = json::array();
    for (std::size_t i = page.offset; i < jobs.size() && items.size() < page.limit; ++i) {
      const Job& j = jobs[i].job;
      items.push_back({{"id", j.id},
                       {"title", j.title},
                       {"instructions", j.instructions},
                       {"category", to_string(j.category)},
                       {"reward", money(j.reward)},
                       {"batch_size", j.batch_size},
                       {"instances_available", jobs[i].instances}});
    }
    return json{{"items", items}, {"total", jobs.size()}, {"limit", page.limit}, {"offset", page.offset}};
  });
}

json Platform::instance_view(const Job& job, const TaskInstance& inst, const std::vector<Unit>& units) {
  json us = json::array();
  for (const auto& u : units) us.push_back({{"id", u.id}, {"payload", u.payload}});
  return json{{"id", inst.id},
              {"job_id", inst.job_id},
              {"title", job.title},
              {"category", to_string(job.category)},
              {"instructions", job.instructions},
              {"fields", job.fields},
              {"reward", money(job.reward)},
              {"reserved_at", timestamp_json(inst.reserved_at)},
              {"expires_at", timestamp_json(inst.expires_at)},
              {"units", us},
              {"template", "/cafe/instances/" + inst.id + "/render"}};
}

json Platform::claim(const Principal& p, std::string_view job_id, const std::optional<std::string>& idem_key) {
  require_cafe(p);
  const Timestamp t = now();
  return store_.transact([&](StoreTxn& txn) {
    return idempotent(txn, p, idem_key, fingerprint("claim", job_id), [&](StoreTxn& tx) {
      Repo repo(tx);
      if (!repo.find_job(job_id)) throw Error(Errc::not_found, "job " + std::string(job_id));
      const TaskInstance inst = claim_next(tx, p.id, job_id, ClaimContext{config_.reservation, t, config_.seed});
      const Job job = repo.job(job_id);
      std::vector<Unit> units;
      for (const auto& id : inst.unit_ids) units.push_back(repo.unit(job.id, id));
      return instance_view(job, inst, units);
    });
  });
}

std::map<std::string, ValueMap> parse_answers(const json& body, ContextLabel& context) {
  if (!body.is_object()) throw Error(Errc::invalid_argument, "body must be an object");
  context = ContextLabel::unspecified;
  if (body.contains("context") && !body.at("context").is_null())
    context = parse_context(body.at("context").get<std::string>());
  if (!body.contains("answers") || !body.at("answers").is_object())
    throw Error(Errc::invalid_argument, "answers must be an object keyed by unit id");
  std::map<std::string, ValueMap> out;
  for (const auto& [unit, values] : body.at("answers").items()) {
    if (!values.is_object()) throw Error(Errc::invalid_argument, "answers for " + unit + " must be an object");
    out.emplace(unit, value_map_from_json(values));
  }
  return out;
}

json Platform::submit(const Principal& p, std::string_view instance_id, const json& body,
                      const std::optional<std::string>& idem_key) {
  require_cafe(p);
  ContextLabel context;
  const auto answers = parse_answers(body, context);
  const Timestamp t = now();
  return store_.transact([&](StoreTxn& txn) {
    return idempotent(txn, p, idem_key, fingerprint("submit", instance_id, body), [&](StoreTxn& tx) {
      const SubmitResult r = submit_instance(tx, p.id, instance_id, answers, context, t);
      json units = json::array();
      for (const auto& u : r.units) units.push_back({{"unit_id", u.unit_id}, {"status", u.accepted ? "accepted" : "rejected"}});
      json out{{"instance_id", r.instance.id},
               {"units", units},
               {"credited", money(r.credited)},
               {"balance", money(ledger::balance(tx, p.id))},
               {"banned", r.banned}};
      if (r.banned) out["notice"] = "You answered too many control questions incorrectly and can no longer work on this task.";
      return out;
    });
  });
}

std::string Platform::load_template(const Job& job) const {
  const std::string& ref = job.ui_template_ref;
  if (ref.empty() || ref.rfind("builtin:", 0) == 0) return {};
  if (ref.rfind("http://", 0) == 0 || ref.rfind("https://", 0) == 0) {
    if (!config_.fetch_remote_templates) throw Error(Errc::not_found, "remote templates are disabled");
    const auto slash = ref.find('/', ref.find("//") + 2);
    const std::string origin = ref.substr(0, slash);
    const std::string path = slash == std::string::npos ? "/" : ref.substr(slash);
    httplib::Client client(origin);
    client.set_connection_timeout(5);
    client.set_read_timeout(10);
    auto res = client.Get(path);
    if (!res || res->status != 200) throw Error(Errc::not_found, "template " + ref + " could not be fetched");
    return res->body;
  }
  const std::filesystem::path rel(ref);
  if (rel.is_absolute()) throw Error(Errc::forbidden, "template paths must be relative");
  for (const auto& part : rel)
    if (part == "..") throw Error(Errc::forbidden, "template path leaves the template directory");
  std::ifstream in(config_.template_dir / rel, std::ios::binary);
  if (!in) throw Error(Errc::not_found, "template " + ref);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string Platform::render(const Principal& p, std::string_view instance_id) {
  require_cafe(p);
  Job job;
  std::vector<Unit> units;
  store_.transact([&](StoreTxn& txn) {
    Repo repo(txn);
    auto inst = repo.find_instance(instance_id);
    if (!inst) throw Error(Errc::not_found, "instance " + std::string(instance_id));
    if (inst->worker_id != p.id) throw Error(Errc::not_reserver, inst->id);
    job = repo.job(inst->job_id);
    units.clear();
    for (const auto& id : inst->unit_ids) units.push_back(repo.unit(job.id, id));
  });
  const std::string tmpl = load_template(job);
  std::string html = "<!doctype html>\n<meta charset=\"utf-8\">\n<title>" + escape_html(job.title) + "</title>\n";
  for (const auto& u : units) {
    html += "<section data-unit=\"" + escape_html(u.id) + "\">\n";
    html += render_unit(tmpl.empty() ? default_template(job, u.payload) : tmpl, u.payload);
    html += "</section>\n";
  }
  return html;
}

json Platform::rewards(const Principal& p) {
  require_role(p, {Role::Worker, Role::Admin});
  return store_.transact([&](StoreTxn& txn) {
    json out = json::array();
    for (const auto& item : ledger::catalog(txn)) out.push_back(item);
    return out;
  });
}

json Platform::purchase(const Principal& p, std::string_view reward_id, const std::optional<std::string>& idem_key) {
  require_cafe(p);
  const Timestamp t = now();
  return store_.transact([&](StoreTxn& txn) {
    return idempotent(txn, p, idem_key, fingerprint("purchase", reward_id), [&](StoreTxn& tx) {
      const Coupon c = ledger::purchase_coupon(tx, p.id, reward_id, t);
      return json{{"coupon", c}, {"balance", money(ledger::balance(tx, p.id))}};
    });
  });
}

json Platform::transactions(const Principal& p, Page page) {
  require_cafe(p);
  if (page.limit == 0 || page.limit > 500) throw Error(Errc::invalid_argument, "limit must be in 1..500");
  return store_.transact([&](StoreTxn& txn) {
    const auto all = ledger::transactions(txn, p.id);
    Cents sum{0};
    for (const auto& t : all) sum = sum + t.amount;
    json items = json::array();
    // newest first
    for (std::size_t i = page.offset; i < all.size() && items.size() < page.limit; ++i) items.push_back(all[all.size() - 1 - i]);
    return json{{"items", items}, {"total", all.size()}, {"balance", money(sum)}, {"limit", page.limit}, {"offset", page.offset}};
  });
}

int Platform::expire_reservations() {
  const Timestamp t = now();
  return store_.transact([&](StoreTxn& txn) { return crowdcafe::expire_reservations(txn, t); });
}

}  // namespace crowdcafe
