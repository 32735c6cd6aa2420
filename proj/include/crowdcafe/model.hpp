#pragma once

// Shared domain vocabulary: jobs, units, task instances, judgments, workers
// and their canonical JSON forms (the service wire format and the export
// file format).

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdcafe/error.hpp"
#include "crowdcafe/time.hpp"

namespace crowdcafe {

using json = nlohmann::json;

// Money is kept in integer euro-cents.
struct Cents {
  std::int64_t value = 0;
  auto operator<=>(const Cents&) const = default;
  Cents operator+(Cents o) const { return {value + o.value}; }
  Cents operator-(Cents o) const { return {value - o.value}; }
  Cents operator-() const { return {-value}; }
};

/// "0.03", "-0.60", "12.00".
std::string format_euros(Cents c);
/// Parses "0.03" / "1" / "0.6"; more than two decimals is an error.
Cents parse_euros(std::string_view text);

enum class Category { Espresso, Cappuccino, Wine };

inline constexpr Category kAllCategories[] = {Category::Espresso, Category::Cappuccino,
                                              Category::Wine};

std::string_view to_string(Category c);
Category parse_category(std::string_view label);
/// Advisory completion time: 10 s, 2 min, 5+ min.
int nominal_duration_seconds(Category c);

enum class JobStatus { Draft, Published, Closed };
std::string_view to_string(JobStatus s);
JobStatus parse_job_status(std::string_view s);

enum class ContextLabel { workplace, outside, bus, home, train, walking, unspecified };
std::string_view to_string(ContextLabel c);
ContextLabel parse_context(std::string_view label);

enum class ValueKind { Text, Number, List };
std::string_view to_string(ValueKind k);
ValueKind parse_value_kind(std::string_view s);

// A single answer: text, number, or a list of texts.
class Value {
 public:
  using List = std::vector<std::string>;

  Value() : v_(std::string{}) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(double d) : v_(d) {}
  Value(int i) : v_(static_cast<double>(i)) {}
  Value(List l) : v_(std::move(l)) {}

  ValueKind kind() const { return static_cast<ValueKind>(v_.index()); }
  const std::string& text() const { return std::get<std::string>(v_); }
  double number() const { return std::get<double>(v_); }
  const List& list() const { return std::get<List>(v_); }

  /// Byte string used for exact comparison and hashing.
  std::string canonical() const;

  bool operator==(const Value&) const = default;

 private:
  std::variant<std::string, double, List> v_;
};

using ValueMap = std::map<std::string, Value>;
using Payload = std::map<std::string, std::string>;

struct AnswerField {
  std::string name;
  ValueKind kind = ValueKind::Text;
  bool required = true;
  bool operator==(const AnswerField&) const = default;
};

struct ExactEquality {
  bool operator==(const ExactEquality&) const = default;
};
struct CaseInsensitiveEquality {
  bool operator==(const CaseInsensitiveEquality&) const = default;
};
struct NumericTolerance {
  double epsilon = 0.0;
  bool operator==(const NumericTolerance&) const = default;
};
struct SetJaccard {
  double threshold = 1.0;
  bool fold_case = false;
  bool operator==(const SetJaccard&) const = default;
};

using SimilarityRule =
    std::variant<ExactEquality, CaseInsensitiveEquality, NumericTolerance, SetJaccard>;

std::string_view rule_name(const SimilarityRule& r);

struct SimilaritySpec {
  std::map<std::string, SimilarityRule> rules;

  /// Unlisted fields compare with ExactEquality.
  SimilarityRule rule_for(const std::string& field) const;
  bool operator==(const SimilaritySpec&) const = default;
};

enum class PreselectionKind { WorkedOn, DidNotWorkOn };

struct PreselectionRule {
  PreselectionKind kind = PreselectionKind::WorkedOn;
  std::string job_id;
  bool operator==(const PreselectionRule&) const = default;
};

struct Job {
  std::string id;
  std::string owner_id;
  std::string title;
  std::string instructions;
  Category category = Category::Espresso;
  int batch_size = 1;
  int min_judgments = 3;
  Cents reward;
  std::string ui_template_ref;
  std::vector<AnswerField> fields;
  std::vector<PreselectionRule> preselection;
  SimilaritySpec similarity;
  int mistake_limit = 0;
  JobStatus status = JobStatus::Draft;
  // "", "csv", "feed" or "survey"; empty until data is attached.
  std::string input_source;

  const AnswerField* field(std::string_view name) const;
  bool operator==(const Job&) const = default;
};

// A job that passed validate_job.
class ValidatedJob {
 public:
  const Job& job() const { return job_; }
  Job release() && { return std::move(job_); }

 private:
  friend ValidatedJob validate_job(Job, const std::function<bool(const std::string&)>&);
  explicit ValidatedJob(Job j) : job_(std::move(j)) {}
  Job job_;
};

/// Checks every Job invariant. `job_exists` resolves preselection targets.
ValidatedJob validate_job(Job draft, const std::function<bool(const std::string&)>& job_exists);

enum class UnitState { Open, Finalized, NoAgreement };
std::string_view to_string(UnitState s);

struct Unit {
  std::string id;
  std::string job_id;
  Payload payload;
  std::optional<ValueMap> gold;
  UnitState state = UnitState::Open;
  std::optional<ValueMap> agreed;  // set iff Finalized
  int support = 0;                 // agreeing judgments when Finalized
  int judgments = 0;               // counted (non-flagged) judgments
  int reserved = 0;                // live reservations holding this unit

  bool is_gold() const { return gold.has_value(); }
  bool operator==(const Unit&) const = default;
};

enum class InstanceState { Reserved, Submitted, Expired };
std::string_view to_string(InstanceState s);

struct TaskInstance {
  std::string id;
  std::string job_id;
  std::string worker_id;
  std::vector<std::string> unit_ids;
  Timestamp reserved_at;
  Timestamp expires_at;
  InstanceState state = InstanceState::Reserved;
  std::optional<Timestamp> submitted_at;
  bool credited = false;
  bool operator==(const TaskInstance&) const = default;
};

enum class GoldOutcome { Correct, Incorrect };

struct Judgment {
  std::string id;
  std::string job_id;
  std::string unit_id;
  std::string worker_id;
  std::string instance_id;
  ValueMap values;
  ContextLabel context = ContextLabel::unspecified;
  Timestamp started_at;
  Timestamp submitted_at;
  std::optional<GoldOutcome> gold_outcome;
  // Recorded by a submission that got the worker banned; kept for audit,
  // excluded from aggregation.
  bool flagged = false;
  bool operator==(const Judgment&) const = default;
};

/// submitted_at - started_at in seconds; NegativeDuration when reversed.
double judgment_duration(const Judgment& j);

struct Worker {
  std::string id;
  std::string display_name;
  std::set<std::string> banned_jobs;
  bool operator==(const Worker&) const = default;
};

// nlohmann ADL hooks. Parsing throws crowdcafe::Error with a descriptive code.
void to_json(json& j, const Cents& c);
void from_json(const json& j, Cents& c);
void to_json(json& j, const Value& v);
void from_json(const json& j, Value& v);
void to_json(json& j, const AnswerField& f);
void from_json(const json& j, AnswerField& f);
void to_json(json& j, const SimilarityRule& r);
void from_json(const json& j, SimilarityRule& r);
void to_json(json& j, const SimilaritySpec& s);
void from_json(const json& j, SimilaritySpec& s);
void to_json(json& j, const PreselectionRule& r);
void from_json(const json& j, PreselectionRule& r);
void to_json(json& j, const Job& job);
void from_json(const json& j, Job& job);
void to_json(json& j, const Unit& u);
void from_json(const json& j, Unit& u);
void to_json(json& j, const TaskInstance& t);
void from_json(const json& j, TaskInstance& t);
void to_json(json& j, const Judgment& jd);
void from_json(const json& j, Judgment& jd);
void to_json(json& j, const Worker& w);
void from_json(const json& j, Worker& w);

json timestamp_json(Timestamp t);
Timestamp timestamp_from_json(const json& j);
json value_map_json(const ValueMap& m);
ValueMap value_map_from_json(const json& j);

}  // namespace crowdcafe
