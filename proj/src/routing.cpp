#include "crowdcafe/routing.hpp"

#include <algorithm>
#include <tuple>

#include "crowdcafe/ledger.hpp"
#include "crowdcafe/quality.hpp"
#include "crowdcafe/repository.hpp"

namespace crowdcafe {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  double uniform() { return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  std::uint64_t state_;
};

bool is_survey(const Job& job) { return job.input_source == "survey"; }

Worker load_worker(Repo& repo, std::string_view id) {
  if (auto w = repo.find_worker(id)) return *w;
  Worker w;
  w.id = id;
  return w;
}

bool claimable(const Unit& u, const WorkerProgress& progress) {
  return u.state == UnitState::Open && !u.is_gold() && !progress.judged.count(u.id);
}

void release_units(Repo& repo, const TaskInstance& inst) {
  for (const auto& uid : inst.unit_ids) {
    auto u = repo.find_unit(inst.job_id, uid);
    if (!u) continue;
    u->reserved = std::max(0, u->reserved - 1);
    repo.put(*u);
  }
}

void expire_instance(Repo& repo, TaskInstance inst) {
  inst.state = InstanceState::Expired;
  release_units(repo, inst);
  repo.put(inst);
  repo.txn().erase(keys::reservation(inst.job_id, inst.worker_id));
}

bool stale(const TaskInstance& inst, Timestamp now) {
  return inst.state == InstanceState::Reserved && inst.expires_at < now;
}

void check_answers(const Job& job, const TaskInstance& inst, const std::map<std::string, ValueMap>& answers) {
  for (const auto& [uid, values] : answers) {
    if (std::find(inst.unit_ids.begin(), inst.unit_ids.end(), uid) == inst.unit_ids.end())
      throw Error(Errc::invalid_argument, "unit " + uid + " is not part of instance " + inst.id);
    for (const auto& [name, value] : values) {
      const AnswerField* f = job.field(name);
      if (!f) throw Error(Errc::invalid_argument, "undeclared field '" + name + "'");
      if (value.kind() != f->kind)
        throw Error(Errc::kind_mismatch, "field '" + name + "' expects " + std::string(to_string(f->kind)));
    }
  }
  for (const auto& uid : inst.unit_ids) {
    auto it = answers.find(uid);
    for (const auto& f : job.fields) {
      if (!f.required) continue;
      if (it == answers.end() || !it->second.count(f.name))
        throw Error(Errc::missing_answer_field, uid + "." + f.name);
    }
  }
}

}  // namespace

bool eligible(const Worker& worker, const Job& job, const std::set<std::string>& history) {
  if (job.status != JobStatus::Published) return false;
  if (worker.banned_jobs.count(job.id)) return false;
  for (const auto& rule : job.preselection) {
    const bool judged = history.count(rule.job_id) > 0;
    if ((rule.kind == PreselectionKind::WorkedOn) != judged) return false;
  }
  return true;
}

int remaining_instances(StoreTxn& txn, const Job& job, std::string_view worker_id) {
  Repo repo(txn);
  const WorkerProgress progress = repo.progress(job.id, worker_id);
  int n = 0;
  for (const auto& u : repo.units(job.id))
    if (claimable(u, progress)) ++n;
  return (n + job.batch_size - 1) / job.batch_size;
}

std::vector<AvailableJob> list_available(StoreTxn& txn, std::string_view worker_id, Category category) {
  Repo repo(txn);
  const Worker worker = load_worker(repo, worker_id);
  const auto history = repo.history(worker_id);
  std::vector<AvailableJob> out;
  for (const auto& r : txn.scan("jobs/")) {
    Job job = r.value.get<Job>();
    if (job.category != category || !eligible(worker, job, history)) continue;
    if (repo.quality(job.id, worker_id).banned) continue;
    const int n = remaining_instances(txn, job, worker_id);
    if (n > 0) out.push_back({std::move(job), n});
  }
  return out;
}

TaskInstance claim_next(StoreTxn& txn, std::string_view worker_id, std::string_view job_id, const ClaimContext& ctx) {
  Repo repo(txn);
  const Job job = repo.job(job_id);
  const Worker worker = load_worker(repo, worker_id);
  WorkerQualityState quality = repo.quality(job.id, worker_id);
  if (quality.banned || !eligible(worker, job, repo.history(worker_id)))
    throw Error(Errc::not_eligible, "job " + job.id);

  if (auto res = txn.read(keys::reservation(job.id, worker_id))) {
    auto inst = repo.find_instance(res->at("instance_id").get<std::string>());
    if (inst && stale(*inst, ctx.now)) {
      expire_instance(repo, *inst);
    } else {
      throw Error(Errc::already_reserved, inst ? inst->id : std::string());
    }
  }

  WorkerProgress progress = repo.progress(job.id, worker_id);
  std::vector<Unit> units = repo.units(job.id);
  std::vector<const Unit*> regular;
  std::vector<const Unit*> gold;
  for (const auto& u : units) {
    if (u.is_gold()) {
      if (u.state == UnitState::Open && !progress.judged.count(u.id)) gold.push_back(&u);
    } else if (claimable(u, progress)) {
      regular.push_back(&u);
    }
  }
  if (regular.empty()) throw Error(Errc::nothing_available, "job " + job.id);

  std::sort(regular.begin(), regular.end(), [](const Unit* a, const Unit* b) {
    return std::forward_as_tuple(a->judgments + a->reserved, a->id) <
           std::forward_as_tuple(b->judgments + b->reserved, b->id);
  });
  const std::size_t k = std::min<std::size_t>(regular.size(), static_cast<std::size_t>(job.batch_size));
  std::vector<const Unit*> chosen(regular.begin(), regular.begin() + static_cast<std::ptrdiff_t>(k));

  ++progress.claims;
  std::uint64_t seed = ctx.seed;
  seed = fnv1a(job.id, seed ^ 0xcbf29ce484222325ULL);
  seed = fnv1a(worker_id, seed);
  seed ^= static_cast<std::uint64_t>(progress.claims) * 0xD1B54A32D192ED03ULL;
  Rng rng(seed);
  if (!gold.empty()) {
    const double p = gold_injection_probability(quality);
    if (rng.uniform() < p) {
      const std::size_t slot = rng.below(chosen.size());
      chosen[slot] = gold[rng.below(gold.size())];
    }
  }

  TaskInstance inst;
  inst.id = job.id + ":" + std::string(worker_id) + ":" + std::to_string(progress.claims);
  inst.job_id = job.id;
  inst.worker_id = worker_id;
  inst.reserved_at = ctx.now;
  inst.expires_at = ctx.now.plus_seconds(ctx.policy.ttl_seconds);
  for (const Unit* u : chosen) {
    inst.unit_ids.push_back(u->id);
    Unit copy = *u;
    ++copy.reserved;
    repo.put(copy);
  }
  repo.put(inst);
  repo.put_progress(job.id, worker_id, progress);
  txn.write(keys::reservation(job.id, worker_id), json{{"instance_id", inst.id}});
  return inst;
}

SubmitResult submit_instance(StoreTxn& txn, std::string_view worker_id, std::string_view instance_id,
                             const std::map<std::string, ValueMap>& answers, ContextLabel context,
                             Timestamp now) {
  Repo repo(txn);
  auto found = repo.find_instance(instance_id);
  if (!found) throw Error(Errc::unknown_instance, std::string(instance_id));
  TaskInstance inst = std::move(*found);
  if (inst.worker_id != worker_id) throw Error(Errc::not_reserver, inst.id);
  if (inst.state == InstanceState::Submitted) throw Error(Errc::conflict, "instance " + inst.id + " already submitted");
  if (inst.state == InstanceState::Expired || stale(inst, now)) throw Error(Errc::reservation_expired, inst.id);

  const Job job = repo.job(inst.job_id);
  check_answers(job, inst, answers);

  WorkerQualityState quality = repo.quality(job.id, worker_id);
  quality.job_id = job.id;
  quality.worker_id = worker_id;

  std::vector<std::pair<Unit, Judgment>> recorded;
  for (const auto& uid : inst.unit_ids) {
    Unit unit = repo.unit(job.id, uid);
    if (repo.find_judgment(job.id, uid, worker_id))
      throw Error(Errc::conflict, "worker already judged unit " + uid);
    Judgment j;
    j.id = job.id + ":" + uid + ":" + std::string(worker_id);
    j.job_id = job.id;
    j.unit_id = uid;
    j.worker_id = worker_id;
    j.instance_id = inst.id;
    j.values = answers.at(uid);
    j.context = context;
    j.started_at = inst.reserved_at;
    j.submitted_at = now;
    if (unit.is_gold()) evaluate_gold(j, *unit.gold, job.similarity, quality);
    recorded.emplace_back(std::move(unit), std::move(j));
  }

  const bool was_banned = quality.banned;
  const bool banned = apply_mistake_limit(quality, job.mistake_limit) == BanStatus::Banned;
  repo.put(quality);

  WorkerProgress progress = repo.progress(job.id, worker_id);
  SubmitResult result;
  for (auto& [unit, j] : recorded) {
    j.flagged = banned;
    repo.put(j);
    progress.judged.insert(unit.id);
    unit.reserved = std::max(0, unit.reserved - 1);
    if (!j.flagged) {
      ++unit.judgments;
      if (!unit.is_gold() && !is_survey(job) && unit.state == UnitState::Open) {
        std::vector<Judgment> counted;
        for (auto& other : repo.unit_judgments(job.id, unit.id))
          if (!other.flagged) counted.push_back(std::move(other));
        const auto agg = aggregate_unit(counted, job.similarity, job.min_judgments);
        if (agg.kind == AggregationResult::Kind::Agreed) {
          unit.state = UnitState::Finalized;
          unit.agreed = agg.value;
          unit.support = agg.support;
        } else if (agg.kind == AggregationResult::Kind::NoAgreement) {
          unit.state = UnitState::NoAgreement;
        }
      }
    }
    repo.put(unit);
    result.units.push_back({unit.id, true});
  }
  repo.put_progress(job.id, worker_id, progress);

  if (banned && !was_banned) {
    Worker worker = load_worker(repo, worker_id);
    worker.banned_jobs.insert(job.id);
    repo.put(worker);
  }

  inst.state = InstanceState::Submitted;
  inst.submitted_at = now;
  repo.put(inst);
  txn.erase(keys::reservation(job.id, worker_id));
  repo.mark_history(worker_id, job.id);

  result.banned = banned;
  if (!banned) {
    result.credited = ledger::credit_judgment(txn, worker_id, job, inst.id, now).amount;
    inst.credited = true;
  }
  result.instance = std::move(inst);
  return result;
}

int expire_reservations(StoreTxn& txn, Timestamp now) {
  Repo repo(txn);
  int n = 0;
  for (const auto& r : txn.scan("reservations/")) {
    auto inst = repo.find_instance(r.value.at("instance_id").get<std::string>());
    if (!inst) {
      txn.erase(r.key);
      continue;
    }
    if (stale(*inst, now)) {
      expire_instance(repo, *inst);
      ++n;
    }
  }
  return n;
}

}  // namespace crowdcafe
