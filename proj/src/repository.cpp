#include "crowdcafe/repository.hpp"

#include <cstdio>

namespace crowdcafe {

bool is_valid_id(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '_' || c == '@' || c == '-';
    if (!ok) return false;
  }
  return true;
}

void require_valid_id(std::string_view id, std::string_view what) {
  if (!is_valid_id(id))
    throw Error(Errc::invalid_argument, std::string(what) + " '" + std::string(id) + "' is not a valid identifier");
}

bool is_valid_instance_id(std::string_view id) {
  if (id.empty() || id.size() > 300) return false;
  std::size_t start = 0;
  int parts = 0;
  while (true) {
    const auto colon = id.find(':', start);
    const auto part = id.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start);
    if (!is_valid_id(part)) return false;
    ++parts;
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  return parts == 3;
}

std::string padded(std::uint64_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*llu", width, static_cast<unsigned long long>(n));
  return buf;
}

namespace keys {

namespace {
std::string cat(std::initializer_list<std::string_view> parts) {
  std::string out;
  bool first = true;
  for (auto p : parts) {
    if (!first) out.push_back('/');
    out.append(p);
    first = false;
  }
  return out;
}
}  // namespace

std::string job(std::string_view job) { return cat({"jobs", job}); }
std::string units(std::string_view job) { return cat({"units", job, ""}); }
std::string unit(std::string_view job, std::string_view unit) { return cat({"units", job, unit}); }
std::string unit_judgments(std::string_view job, std::string_view unit) { return cat({"judgments", job, unit, ""}); }
std::string job_judgments(std::string_view job) { return cat({"judgments", job, ""}); }
std::string judgment(std::string_view job, std::string_view unit, std::string_view worker) {
  return cat({"judgments", job, unit, worker});
}
std::string instance(std::string_view id) { return cat({"instances", id}); }
std::string reservation(std::string_view job, std::string_view worker) { return cat({"reservations", job, worker}); }
std::string quality(std::string_view job, std::string_view worker) { return cat({"quality", job, worker}); }
std::string progress(std::string_view job, std::string_view worker) { return cat({"progress", job, worker}); }
std::string history(std::string_view worker) { return cat({"history", worker, ""}); }
std::string history(std::string_view worker, std::string_view job) { return cat({"history", worker, job}); }
std::string worker(std::string_view worker) { return cat({"workers", worker}); }

}  // namespace keys

std::optional<Job> Repo::find_job(std::string_view id) {
  auto v = txn_.read(keys::job(id));
  if (!v) return std::nullopt;
  return v->get<Job>();
}

Job Repo::job(std::string_view id) {
  auto j = find_job(id);
  if (!j) throw Error(Errc::not_found, "job " + std::string(id));
  return std::move(*j);
}

void Repo::put(const Job& job) { txn_.write(keys::job(job.id), job); }

std::optional<Unit> Repo::find_unit(std::string_view job, std::string_view unit) {
  auto v = txn_.read(keys::unit(job, unit));
  if (!v) return std::nullopt;
  return v->get<Unit>();
}

Unit Repo::unit(std::string_view job, std::string_view unit) {
  auto u = find_unit(job, unit);
  if (!u) throw Error(Errc::not_found, "unit " + std::string(unit));
  return std::move(*u);
}

void Repo::put(const Unit& unit) { txn_.write(keys::unit(unit.job_id, unit.id), unit); }

std::vector<Unit> Repo::units(std::string_view job) {
  std::vector<Unit> out;
  for (auto& r : txn_.scan(keys::units(job))) out.push_back(r.value.get<Unit>());
  return out;
}

std::optional<TaskInstance> Repo::find_instance(std::string_view id) {
  if (!is_valid_instance_id(id)) return std::nullopt;
  auto v = txn_.read(keys::instance(id));
  if (!v) return std::nullopt;
  return v->get<TaskInstance>();
}

void Repo::put(const TaskInstance& inst) { txn_.write(keys::instance(inst.id), inst); }

std::optional<Judgment> Repo::find_judgment(std::string_view job, std::string_view unit, std::string_view worker) {
  auto v = txn_.read(keys::judgment(job, unit, worker));
  if (!v) return std::nullopt;
  return v->get<Judgment>();
}

void Repo::put(const Judgment& j) { txn_.write(keys::judgment(j.job_id, j.unit_id, j.worker_id), j); }

std::vector<Judgment> Repo::unit_judgments(std::string_view job, std::string_view unit) {
  std::vector<Judgment> out;
  for (auto& r : txn_.scan(keys::unit_judgments(job, unit))) out.push_back(r.value.get<Judgment>());
  return out;
}

WorkerQualityState Repo::quality(std::string_view job, std::string_view worker) {
  if (auto v = txn_.read(keys::quality(job, worker))) return v->get<WorkerQualityState>();
  WorkerQualityState s;
  s.job_id = job;
  s.worker_id = worker;
  return s;
}

void Repo::put(const WorkerQualityState& s) { txn_.write(keys::quality(s.job_id, s.worker_id), s); }

WorkerProgress Repo::progress(std::string_view job, std::string_view worker) {
  WorkerProgress p;
  if (auto v = txn_.read(keys::progress(job, worker))) {
    p.claims = v->value("claims", 0);
    p.judged = v->value("judged", std::set<std::string>{});
  }
  return p;
}

void Repo::put_progress(std::string_view job, std::string_view worker, const WorkerProgress& p) {
  txn_.write(keys::progress(job, worker), json{{"claims", p.claims}, {"judged", p.judged}});
}

std::optional<Worker> Repo::find_worker(std::string_view id) {
  auto v = txn_.read(keys::worker(id));
  if (!v) return std::nullopt;
  return v->get<Worker>();
}

Worker Repo::worker(std::string_view id) {
  auto w = find_worker(id);
  if (!w) throw Error(Errc::not_found, "worker " + std::string(id));
  return std::move(*w);
}

void Repo::put(const Worker& w) { txn_.write(keys::worker(w.id), w); }

std::set<std::string> Repo::history(std::string_view worker) {
  std::set<std::string> out;
  const std::string prefix = keys::history(worker);
  for (auto& r : txn_.scan(prefix)) out.insert(r.key.substr(prefix.size()));
  return out;
}

void Repo::mark_history(std::string_view worker, std::string_view job) {
  const std::string key = keys::history(worker, job);
  if (!txn_.exists(key)) txn_.write(key, json::object());
}

}  // namespace crowdcafe
