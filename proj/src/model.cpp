#include "crowdcafe/model.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

namespace crowdcafe {

namespace {

template <typename... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw Error(Errc::missing_field, key);
  return *it;
}

std::string opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw Error(Errc::invalid_argument, std::string(key) + " must be a string");
  return it->get<std::string>();
}

int opt_int(const json& j, const char* key, int fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_number_integer())
    throw Error(Errc::invalid_argument, std::string(key) + " must be an integer");
  return it->get<int>();
}

}  // namespace

// ---------------------------------------------------------------- money

std::string format_euros(Cents c) {
  const std::int64_t abs = c.value < 0 ? -c.value : c.value;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", c.value < 0 ? "-" : "",
                static_cast<long long>(abs / 100), static_cast<long long>(abs % 100));
  return buf;
}

Cents parse_euros(std::string_view text) {
  auto fail = [&] { throw Error(Errc::invalid_argument, "bad euro amount '" + std::string(text) + "'"); };
  if (text.empty()) fail();
  bool neg = false;
  std::size_t i = 0;
  if (text[0] == '-') {
    neg = true;
    ++i;
  }
  std::int64_t whole = 0;
  std::size_t start = i;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') whole = whole * 10 + (text[i++] - '0');
  if (i == start) fail();
  std::int64_t frac = 0;
  if (i < text.size()) {
    if (text[i] != '.') fail();
    ++i;
    int n = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
      frac = frac * 10 + (text[i++] - '0');
      ++n;
    }
    if (n == 0 || n > 2 || i != text.size()) fail();
    if (n == 1) frac *= 10;
  }
  const std::int64_t cents = whole * 100 + frac;
  return Cents{neg ? -cents : cents};
}

// ---------------------------------------------------------------- enums

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Espresso: return "Espresso";
    case Category::Cappuccino: return "Cappuccino";
    case Category::Wine: return "Wine";
  }
  return "";
}

Category parse_category(std::string_view label) {
  for (Category c : kAllCategories)
    if (to_string(c) == label) return c;
  throw Error(Errc::unknown_category, std::string(label));
}

int nominal_duration_seconds(Category c) {
  switch (c) {
    case Category::Espresso: return 10;
    case Category::Cappuccino: return 120;
    case Category::Wine: return 300;
  }
  return 0;
}

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::Draft: return "Draft";
    case JobStatus::Published: return "Published";
    case JobStatus::Closed: return "Closed";
  }
  return "";
}

JobStatus parse_job_status(std::string_view s) {
  if (s == "Draft") return JobStatus::Draft;
  if (s == "Published") return JobStatus::Published;
  if (s == "Closed") return JobStatus::Closed;
  throw Error(Errc::invalid_argument, "unknown job status '" + std::string(s) + "'");
}

std::string_view to_string(ContextLabel c) {
  switch (c) {
    case ContextLabel::workplace: return "workplace";
    case ContextLabel::outside: return "outside";
    case ContextLabel::bus: return "bus";
    case ContextLabel::home: return "home";
    case ContextLabel::train: return "train";
    case ContextLabel::walking: return "walking";
    case ContextLabel::unspecified: return "unspecified";
  }
  return "";
}

ContextLabel parse_context(std::string_view label) {
  for (auto c : {ContextLabel::workplace, ContextLabel::outside, ContextLabel::bus,
                 ContextLabel::home, ContextLabel::train, ContextLabel::walking,
                 ContextLabel::unspecified})
    if (to_string(c) == label) return c;
  throw Error(Errc::unknown_context, std::string(label));
}

std::string_view to_string(ValueKind k) {
  switch (k) {
    case ValueKind::Text: return "text";
    case ValueKind::Number: return "number";
    case ValueKind::List: return "list";
  }
  return "";
}

ValueKind parse_value_kind(std::string_view s) {
  if (s == "text") return ValueKind::Text;
  if (s == "number") return ValueKind::Number;
  if (s == "list") return ValueKind::List;
  throw Error(Errc::invalid_argument, "unknown value kind '" + std::string(s) + "'");
}

std::string_view to_string(UnitState s) {
  switch (s) {
    case UnitState::Open: return "Open";
    case UnitState::Finalized: return "Finalized";
    case UnitState::NoAgreement: return "NoAgreement";
  }
  return "";
}

std::string_view to_string(InstanceState s) {
  switch (s) {
    case InstanceState::Reserved: return "Reserved";
    case InstanceState::Submitted: return "Submitted";
    case InstanceState::Expired: return "Expired";
  }
  return "";
}

// ---------------------------------------------------------------- values

std::string Value::canonical() const {
  switch (kind()) {
    case ValueKind::Text:
      return text();
    case ValueKind::Number: {
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, number());
      return std::string(buf, end);
    }
    case ValueKind::List:
      return json(list()).dump();
  }
  return {};
}

std::string_view rule_name(const SimilarityRule& r) {
  return std::visit(overloaded{
                        [](const ExactEquality&) { return std::string_view("exact"); },
                        [](const CaseInsensitiveEquality&) { return std::string_view("case_insensitive"); },
                        [](const NumericTolerance&) { return std::string_view("numeric_tolerance"); },
                        [](const SetJaccard&) { return std::string_view("set_jaccard"); },
                    },
                    r);
}

SimilarityRule SimilaritySpec::rule_for(const std::string& field) const {
  auto it = rules.find(field);
  return it == rules.end() ? SimilarityRule{ExactEquality{}} : it->second;
}

const AnswerField* Job::field(std::string_view name) const {
  for (const auto& f : fields)
    if (f.name == name) return &f;
  return nullptr;
}

// ---------------------------------------------------------------- validation

ValidatedJob validate_job(Job draft, const std::function<bool(const std::string&)>& job_exists) {
  if (draft.title.empty()) throw Error(Errc::missing_field, "title");
  if (draft.instructions.empty()) throw Error(Errc::missing_field, "instructions");
  if (draft.ui_template_ref.empty()) throw Error(Errc::missing_field, "ui_template_ref");
  if (draft.fields.empty()) throw Error(Errc::missing_field, "fields");
  if (draft.batch_size < 1) throw Error(Errc::invalid_batch_size, std::to_string(draft.batch_size));
  if (draft.min_judgments < 1)
    throw Error(Errc::invalid_argument, "min_judgments must be >= 1");
  if (draft.reward.value < 0) throw Error(Errc::invalid_argument, "reward must be >= 0");
  if (draft.mistake_limit < 0) throw Error(Errc::invalid_argument, "mistake_limit must be >= 0");

  std::set<std::string> names;
  for (const auto& f : draft.fields) {
    if (f.name.empty()) throw Error(Errc::missing_field, "fields[].name");
    if (!names.insert(f.name).second)
      throw Error(Errc::invalid_argument, "duplicate answer field '" + f.name + "'");
  }

  for (const auto& [name, rule] : draft.similarity.rules) {
    const AnswerField* f = draft.field(name);
    if (!f) throw Error(Errc::invalid_argument, "similarity rule for unknown field '" + name + "'");
    const bool ok = std::visit(
        overloaded{
            [](const ExactEquality&) { return true; },
            [&](const CaseInsensitiveEquality&) { return f->kind == ValueKind::Text; },
            [&](const NumericTolerance& r) {
              if (!(r.epsilon >= 0.0)) throw Error(Errc::invalid_argument, "epsilon must be >= 0");
              return f->kind == ValueKind::Number;
            },
            [&](const SetJaccard& r) {
              if (!(r.threshold > 0.0 && r.threshold <= 1.0))
                throw Error(Errc::invalid_argument, "jaccard threshold must be in (0,1]");
              return f->kind == ValueKind::List;
            },
        },
        rule);
    if (!ok)
      throw Error(Errc::kind_mismatch, std::string(rule_name(rule)) + " on " +
                                           std::string(to_string(f->kind)) + " field '" + name + "'");
  }

  for (const auto& rule : draft.preselection) {
    if (rule.job_id.empty() || !job_exists(rule.job_id))
      throw Error(Errc::dangling_preselection_ref, rule.job_id);
  }
  return ValidatedJob(std::move(draft));
}

double judgment_duration(const Judgment& j) {
  if (j.submitted_at < j.started_at)
    throw Error(Errc::negative_duration, to_rfc3339(j.started_at) + " > " + to_rfc3339(j.submitted_at));
  return seconds_between(j.started_at, j.submitted_at);
}

// ---------------------------------------------------------------- json

json timestamp_json(Timestamp t) { return to_rfc3339(t); }

Timestamp timestamp_from_json(const json& j) {
  if (!j.is_string()) throw Error(Errc::invalid_argument, "timestamp must be an RFC 3339 string");
  return parse_rfc3339(j.get<std::string>());
}

void to_json(json& j, const Cents& c) { j = json{{"cents", c.value}, {"currency", "EUR"}}; }

void from_json(const json& j, Cents& c) {
  if (j.is_string()) {
    c = parse_euros(j.get<std::string>());
    return;
  }
  if (!j.is_object()) throw Error(Errc::invalid_argument, "money must be {\"cents\":n,\"currency\":\"EUR\"}");
  const auto& cur = require(j, "currency");
  if (cur != "EUR") throw Error(Errc::invalid_argument, "only EUR amounts are supported");
  const auto& cents = require(j, "cents");
  if (!cents.is_number_integer()) throw Error(Errc::invalid_argument, "cents must be an integer");
  c.value = cents.get<std::int64_t>();
}

void to_json(json& j, const Value& v) {
  switch (v.kind()) {
    case ValueKind::Text: j = v.text(); break;
    case ValueKind::Number: j = v.number(); break;
    case ValueKind::List: j = v.list(); break;
  }
}

void from_json(const json& j, Value& v) {
  if (j.is_string()) {
    v = Value(j.get<std::string>());
  } else if (j.is_number()) {
    v = Value(j.get<double>());
  } else if (j.is_array()) {
    Value::List l;
    for (const auto& e : j) {
      if (!e.is_string()) throw Error(Errc::invalid_argument, "list values must contain strings");
      l.push_back(e.get<std::string>());
    }
    v = Value(std::move(l));
  } else {
    throw Error(Errc::invalid_argument, "answer values must be text, number, or list of text");
  }
}

json value_map_json(const ValueMap& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

ValueMap value_map_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::invalid_argument, "expected an object of answers");
  ValueMap m;
  for (auto it = j.begin(); it != j.end(); ++it) m.emplace(it.key(), it.value().get<Value>());
  return m;
}

void to_json(json& j, const AnswerField& f) {
  j = json{{"name", f.name}, {"kind", to_string(f.kind)}, {"required", f.required}};
}

void from_json(const json& j, AnswerField& f) {
  f.name = require(j, "name").get<std::string>();
  f.kind = parse_value_kind(j.value("kind", std::string("text")));
  f.required = j.value("required", true);
}

void to_json(json& j, const SimilarityRule& r) {
  j = std::visit(overloaded{
                     [](const ExactEquality&) { return json{{"rule", "exact"}}; },
                     [](const CaseInsensitiveEquality&) { return json{{"rule", "case_insensitive"}}; },
                     [](const NumericTolerance& n) {
                       return json{{"rule", "numeric_tolerance"}, {"epsilon", n.epsilon}};
                     },
                     [](const SetJaccard& s) {
                       return json{{"rule", "set_jaccard"}, {"threshold", s.threshold}, {"fold_case", s.fold_case}};
                     },
                 },
                 r);
}

void from_json(const json& j, SimilarityRule& r) {
  const std::string name = require(j, "rule").get<std::string>();
  if (name == "exact") {
    r = ExactEquality{};
  } else if (name == "case_insensitive") {
    r = CaseInsensitiveEquality{};
  } else if (name == "numeric_tolerance") {
    r = NumericTolerance{require(j, "epsilon").get<double>()};
  } else if (name == "set_jaccard") {
    r = SetJaccard{require(j, "threshold").get<double>(), j.value("fold_case", false)};
  } else {
    throw Error(Errc::invalid_argument, "unknown similarity rule '" + name + "'");
  }
}

void to_json(json& j, const SimilaritySpec& s) {
  j = json::object();
  for (const auto& [k, r] : s.rules) j[k] = r;
}

void from_json(const json& j, SimilaritySpec& s) {
  s.rules.clear();
  if (j.is_null()) return;
  if (!j.is_object()) throw Error(Errc::invalid_argument, "similarity must map field names to rules");
  for (auto it = j.begin(); it != j.end(); ++it) s.rules.emplace(it.key(), it.value().get<SimilarityRule>());
}

void to_json(json& j, const PreselectionRule& r) {
  j = json{{"kind", r.kind == PreselectionKind::WorkedOn ? "worked_on" : "did_not_work_on"},
           {"job_id", r.job_id}};
}

void from_json(const json& j, PreselectionRule& r) {
  const std::string kind = require(j, "kind").get<std::string>();
  if (kind == "worked_on") {
    r.kind = PreselectionKind::WorkedOn;
  } else if (kind == "did_not_work_on") {
    r.kind = PreselectionKind::DidNotWorkOn;
  } else {
    throw Error(Errc::invalid_argument, "unknown preselection kind '" + kind + "'");
  }
  r.job_id = require(j, "job_id").get<std::string>();
}

void to_json(json& j, const Job& job) {
  j = json{{"id", job.id},
           {"owner_id", job.owner_id},
           {"title", job.title},
           {"instructions", job.instructions},
           {"category", to_string(job.category)},
           {"batch_size", job.batch_size},
           {"min_judgments", job.min_judgments},
           {"reward", job.reward},
           {"ui_template_ref", job.ui_template_ref},
           {"fields", job.fields},
           {"preselection", job.preselection},
           {"similarity", job.similarity},
           {"mistake_limit", job.mistake_limit},
           {"status", to_string(job.status)},
           {"input_source", job.input_source}};
}

void from_json(const json& j, Job& job) {
  if (!j.is_object()) throw Error(Errc::invalid_argument, "job must be an object");
  job.id = opt_string(j, "id");
  job.owner_id = opt_string(j, "owner_id");
  job.title = opt_string(j, "title");
  job.instructions = opt_string(j, "instructions");
  job.category = parse_category(require(j, "category").get<std::string>());
  const auto& bs = require(j, "batch_size");
  if (!bs.is_number_integer()) throw Error(Errc::invalid_batch_size, "batch_size must be an integer");
  job.batch_size = bs.get<int>();
  job.min_judgments = opt_int(j, "min_judgments", 3);
  job.reward = j.contains("reward") ? j.at("reward").get<Cents>() : Cents{0};
  job.ui_template_ref = opt_string(j, "ui_template_ref");
  job.fields = j.value("fields", std::vector<AnswerField>{});
  job.preselection = j.value("preselection", std::vector<PreselectionRule>{});
  job.similarity = j.contains("similarity") ? j.at("similarity").get<SimilaritySpec>() : SimilaritySpec{};
  job.mistake_limit = opt_int(j, "mistake_limit", 0);
  job.status = j.contains("status") ? parse_job_status(j.at("status").get<std::string>()) : JobStatus::Draft;
  job.input_source = opt_string(j, "input_source");
}

void to_json(json& j, const Unit& u) {
  j = json{{"id", u.id},
           {"job_id", u.job_id},
           {"payload", u.payload},
           {"gold", u.gold ? value_map_json(*u.gold) : json(nullptr)},
           {"status", to_string(u.state)},
           {"agreed", u.agreed ? value_map_json(*u.agreed) : json(nullptr)},
           {"support", u.support},
           {"judgments", u.judgments},
           {"reserved", u.reserved}};
}

void from_json(const json& j, Unit& u) {
  u.id = require(j, "id").get<std::string>();
  u.job_id = require(j, "job_id").get<std::string>();
  u.payload = j.value("payload", Payload{});
  u.gold.reset();
  if (j.contains("gold") && !j.at("gold").is_null()) u.gold = value_map_from_json(j.at("gold"));
  const std::string st = j.value("status", std::string("Open"));
  if (st == "Open") {
    u.state = UnitState::Open;
  } else if (st == "Finalized") {
    u.state = UnitState::Finalized;
  } else if (st == "NoAgreement") {
    u.state = UnitState::NoAgreement;
  } else {
    throw Error(Errc::invalid_argument, "unknown unit status '" + st + "'");
  }
  u.agreed.reset();
  if (j.contains("agreed") && !j.at("agreed").is_null()) u.agreed = value_map_from_json(j.at("agreed"));
  u.support = j.value("support", 0);
  u.judgments = j.value("judgments", 0);
  u.reserved = j.value("reserved", 0);
}

void to_json(json& j, const TaskInstance& t) {
  j = json{{"id", t.id},
           {"job_id", t.job_id},
           {"worker_id", t.worker_id},
           {"unit_ids", t.unit_ids},
           {"reserved_at", timestamp_json(t.reserved_at)},
           {"expires_at", timestamp_json(t.expires_at)},
           {"state", to_string(t.state)},
           {"submitted_at", t.submitted_at ? timestamp_json(*t.submitted_at) : json(nullptr)},
           {"credited", t.credited}};
}

void from_json(const json& j, TaskInstance& t) {
  t.id = require(j, "id").get<std::string>();
  t.job_id = require(j, "job_id").get<std::string>();
  t.worker_id = require(j, "worker_id").get<std::string>();
  t.unit_ids = require(j, "unit_ids").get<std::vector<std::string>>();
  t.reserved_at = timestamp_from_json(require(j, "reserved_at"));
  t.expires_at = timestamp_from_json(require(j, "expires_at"));
  const std::string st = require(j, "state").get<std::string>();
  if (st == "Reserved") {
    t.state = InstanceState::Reserved;
  } else if (st == "Submitted") {
    t.state = InstanceState::Submitted;
  } else if (st == "Expired") {
    t.state = InstanceState::Expired;
  } else {
    throw Error(Errc::invalid_argument, "unknown instance state '" + st + "'");
  }
  t.submitted_at.reset();
  if (j.contains("submitted_at") && !j.at("submitted_at").is_null())
    t.submitted_at = timestamp_from_json(j.at("submitted_at"));
  t.credited = j.value("credited", false);
}

void to_json(json& j, const Judgment& jd) {
  json outcome = nullptr;
  if (jd.gold_outcome) outcome = *jd.gold_outcome == GoldOutcome::Correct ? "Correct" : "Incorrect";
  j = json{{"id", jd.id},
           {"job_id", jd.job_id},
           {"unit_id", jd.unit_id},
           {"worker_id", jd.worker_id},
           {"instance_id", jd.instance_id},
           {"values", value_map_json(jd.values)},
           {"context", to_string(jd.context)},
           {"started_at", timestamp_json(jd.started_at)},
           {"submitted_at", timestamp_json(jd.submitted_at)},
           {"gold_outcome", outcome},
           {"flagged", jd.flagged}};
}

void from_json(const json& j, Judgment& jd) {
  jd.id = require(j, "id").get<std::string>();
  jd.job_id = opt_string(j, "job_id");
  jd.unit_id = require(j, "unit_id").get<std::string>();
  jd.worker_id = require(j, "worker_id").get<std::string>();
  jd.instance_id = opt_string(j, "instance_id");
  jd.values = value_map_from_json(require(j, "values"));
  jd.context = parse_context(j.value("context", std::string("unspecified")));
  jd.started_at = timestamp_from_json(require(j, "started_at"));
  jd.submitted_at = timestamp_from_json(require(j, "submitted_at"));
  jd.gold_outcome.reset();
  if (j.contains("gold_outcome") && !j.at("gold_outcome").is_null()) {
    const std::string o = j.at("gold_outcome").get<std::string>();
    if (o == "Correct") {
      jd.gold_outcome = GoldOutcome::Correct;
    } else if (o == "Incorrect") {
      jd.gold_outcome = GoldOutcome::Incorrect;
    } else {
      throw Error(Errc::invalid_argument, "unknown gold outcome '" + o + "'");
    }
  }
  jd.flagged = j.value("flagged", false);
}

void to_json(json& j, const Worker& w) {
  j = json{{"id", w.id}, {"display_name", w.display_name}, {"banned_jobs", w.banned_jobs}};
}

void from_json(const json& j, Worker& w) {
  w.id = require(j, "id").get<std::string>();
  w.display_name = opt_string(j, "display_name");
  w.banned_jobs = j.value("banned_jobs", std::set<std::string>{});
}

}  // namespace crowdcafe
