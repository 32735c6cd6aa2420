#include "crowdcafe/reports.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <tuple>

#include "crowdcafe/analytics.hpp"
#include "crowdcafe/ingestion.hpp"
#include "crowdcafe/repository.hpp"

namespace crowdcafe::reports {

namespace {

std::string status_label(const Unit& u) {
  return u.state == UnitState::Open ? "Pending" : std::string(to_string(u.state));
}

std::string value_cell(const std::optional<ValueMap>& v) { return v ? value_map_json(*v).dump() : std::string(); }

std::string number_text(double d) {
  std::ostringstream ss;
  ss << std::setprecision(10) << d;
  return ss.str();
}

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object() && !j.empty()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    return;
  }
  if (j.is_array() && !j.empty() && (j.front().is_object() || j.front().is_array())) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
    return;
  }
  std::string text;
  if (j.is_string()) {
    text = j.get<std::string>();
  } else if (j.is_number_float()) {
    text = number_text(j.get<double>());
  } else {
    text = j.dump();
  }
  out.emplace_back(prefix, text);
}

}  // namespace

std::vector<Judgment> job_judgments(StoreTxn& txn, const Job& job) {
  std::vector<Judgment> out;
  for (const auto& r : txn.scan(keys::job_judgments(job.id))) out.push_back(r.value.get<Judgment>());
  std::sort(out.begin(), out.end(), [](const Judgment& a, const Judgment& b) {
    return std::tie(a.submitted_at, a.id) < std::tie(b.submitted_at, b.id);
  });
  return out;
}

json results_json(StoreTxn& txn, const Job& job) {
  Repo repo(txn);
  json units = json::array();
  for (const auto& u : repo.units(job.id)) {
    units.push_back({{"id", u.id},
                     {"status", status_label(u)},
                     {"gold", u.is_gold()},
                     {"payload", u.payload},
                     {"agreed", u.agreed ? value_map_json(*u.agreed) : json(nullptr)},
                     {"support", u.support},
                     {"judgments", u.judgments}});
  }
  json rows = json::array();
  for (const auto& j : job_judgments(txn, job)) {
    json row = j;
    row["duration_seconds"] = judgment_duration(j);
    rows.push_back(std::move(row));
  }
  return json{{"job", job}, {"units", units}, {"judgments", rows}};
}

std::string results_csv(StoreTxn& txn, const Job& job) {
  Repo repo(txn);
  const std::vector<std::string> header{"unit_id", "status", "gold", "agreed", "support", "judgments", "payload"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& u : repo.units(job.id)) {
    rows.push_back({u.id, status_label(u), u.is_gold() ? "true" : "false", value_cell(u.agreed),
                    std::to_string(u.support), std::to_string(u.judgments), json(u.payload).dump()});
  }
  return write_csv(header, rows);
}

std::string judgments_csv(StoreTxn& txn, const Job& job) {
  const std::vector<std::string> header{"judgment_id", "unit_id",   "worker_id",        "instance_id", "values",
                                        "context",     "started_at", "submitted_at", "duration_seconds",
                                        "gold_outcome", "flagged"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& j : job_judgments(txn, job)) {
    std::string outcome;
    if (j.gold_outcome) outcome = *j.gold_outcome == GoldOutcome::Correct ? "correct" : "incorrect";
    rows.push_back({j.id, j.unit_id, j.worker_id, j.instance_id, value_map_json(j.values).dump(),
                    std::string(to_string(j.context)), to_rfc3339(j.started_at), to_rfc3339(j.submitted_at),
                    number_text(judgment_duration(j)), outcome, j.flagged ? "true" : "false"});
  }
  return write_csv(header, rows);
}

json kappa_json(StoreTxn& txn, const Job& job, const std::optional<std::string>& field) {
  std::string name;
  if (field) {
    if (!job.field(*field)) throw Error(Errc::invalid_argument, "job has no field '" + *field + "'");
    name = *field;
  } else {
    for (const auto& f : job.fields) {
      if (f.kind == ValueKind::Text) {
        name = f.name;
        break;
      }
    }
    if (name.empty()) name = job.fields.front().name;
  }
  Repo repo(txn);
  std::set<std::string> regular;
  for (const auto& u : repo.units(job.id))
    if (!u.is_gold()) regular.insert(u.id);
  std::vector<Judgment> counted;
  for (auto& j : job_judgments(txn, job))
    if (!j.flagged && regular.count(j.unit_id) && j.values.count(name)) counted.push_back(std::move(j));

  json out{{"job_id", job.id}, {"field", name}, {"raters", job.min_judgments}};
  try {
    const LabeledMatrix m = rating_matrix_from_judgments(counted, name, job.min_judgments);
    const KappaResult k = fleiss_kappa(m.matrix);
    out["subjects"] = m.matrix.n_subjects();
    out["categories"] = m.categories;
    out["kappa"] = to_json(k);
  } catch (const Error& e) {
    if (e.code() != Errc::invalid_argument && e.code() != Errc::too_few_raters) throw;
    out["subjects"] = 0;
    out["categories"] = json::array();
    out["kappa"] = nullptr;
  }
  return out;
}

json stats_json(StoreTxn& txn, const Job& job) {
  std::vector<double> durations;
  for (const auto& r : txn.scan("instances/" + job.id + ":")) {
    const TaskInstance inst = r.value.get<TaskInstance>();
    if (inst.job_id != job.id || inst.state != InstanceState::Submitted || !inst.submitted_at) continue;
    durations.push_back(seconds_between(inst.reserved_at, *inst.submitted_at));
  }
  const auto judgments = job_judgments(txn, job);
  json out{{"job_id", job.id},
           {"instances", to_json(execution_stats(durations))},
           {"judgments", judgments.size()},
           {"context", to_json(context_distribution(judgments))}};
  json compliance = json::object();
  for (const auto& f : job.fields) {
    if (f.kind != ValueKind::List) continue;
    std::vector<Judgment> with;
    for (const auto& j : judgments)
      if (j.values.count(f.name)) with.push_back(j);
    compliance[f.name] = compliance_rate(with, f.name);
  }
  out["compliance"] = compliance;
  return out;
}

std::string to_text(const json& report) {
  std::vector<std::pair<std::string, std::string>> lines;
  flatten(report, "", lines);
  std::size_t width = 0;
  for (const auto& [k, v] : lines) width = std::max(width, k.size());
  std::string out;
  for (const auto& [k, v] : lines) {
    out += k;
    out.append(width - k.size() + 2, ' ');
    out += v;
    out.push_back('\n');
  }
  return out;
}

}  // namespace crowdcafe::reports
