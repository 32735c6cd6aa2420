#include <gtest/gtest.h>

#include <random>

#include "crowdcafe/model.hpp"

using namespace crowdcafe;

namespace {

Job espresso_job() {
  Job j;
  j.id = "sentences";
  j.title = "Sentence relations";
  j.instructions = "Pick the relation.";
  j.category = Category::Espresso;
  j.batch_size = 3;
  j.reward = parse_euros("0.03");
  j.ui_template_ref = "builtin:relation";
  j.fields = {{"relation", ValueKind::Text, true}};
  return j;
}

auto no_jobs = [](const std::string&) { return false; };

Judgment timed(const std::string& start, const std::string& end) {
  Judgment j;
  j.started_at = parse_rfc3339(start);
  j.submitted_at = parse_rfc3339(end);
  return j;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::config_error;
}

}  // namespace

TEST(Money, ParsesPaperAmounts) {
  EXPECT_EQ(parse_euros("0.03").value, 3);
  EXPECT_EQ(parse_euros("0.33").value, 33);
  EXPECT_EQ(parse_euros("0.60").value, 60);
  EXPECT_EQ(parse_euros("0.6").value, 60);
  EXPECT_EQ(parse_euros("12").value, 1200);
  EXPECT_EQ(parse_euros("-0.60").value, -60);
}

TEST(Money, RejectsMalformedAmounts) {
  for (const char* bad : {"", "0.333", ".5", "1.", "abc", "1,50", "-"})
    EXPECT_EQ(code_of([&] { parse_euros(bad); }), Errc::invalid_argument) << bad;
}

TEST(Money, FormatParseRoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> d(-1'000'000, 1'000'000);
  for (int i = 0; i < 2000; ++i) {
    const Cents c{d(rng)};
    EXPECT_EQ(parse_euros(format_euros(c)), c);
  }
  EXPECT_EQ(format_euros(Cents{3}), "0.03");
  EXPECT_EQ(format_euros(Cents{-60}), "-0.60");
}

TEST(Money, JsonFormsAgree) {
  EXPECT_EQ(json("0.03").get<Cents>().value, 3);
  EXPECT_EQ(json({{"cents", 33}, {"currency", "EUR"}}).get<Cents>().value, 33);
  EXPECT_EQ(code_of([] { json({{"cents", 33}, {"currency", "USD"}}).get<Cents>(); }), Errc::invalid_argument);
}

TEST(Category, NominalDurations) {
  EXPECT_EQ(nominal_duration_seconds(Category::Espresso), 10);
  EXPECT_EQ(nominal_duration_seconds(Category::Cappuccino), 120);
  EXPECT_EQ(nominal_duration_seconds(Category::Wine), 300);
  for (Category c : kAllCategories) EXPECT_EQ(parse_category(to_string(c)), c);
  EXPECT_EQ(code_of([] { parse_category("Latte"); }), Errc::unknown_category);
}

TEST(Context, LabelsRoundTrip) {
  for (const char* s : {"workplace", "outside", "bus", "home", "train", "walking", "unspecified"})
    EXPECT_EQ(to_string(parse_context(s)), s);
  EXPECT_EQ(code_of([] { parse_context("office"); }), Errc::unknown_context);
}

TEST(ValidateJob, AcceptsEspressoDraft) {
  const auto v = validate_job(espresso_job(), no_jobs);
  EXPECT_EQ(v.job().reward.value, 3);
  EXPECT_EQ(v.job().batch_size, 3);
}

TEST(ValidateJob, RejectsZeroBatch) {
  Job j = espresso_job();
  j.batch_size = 0;
  EXPECT_EQ(code_of([&] { validate_job(j, no_jobs); }), Errc::invalid_batch_size);
}

TEST(ValidateJob, RejectsDanglingPreselection) {
  Job j = espresso_job();
  j.preselection.push_back({PreselectionKind::WorkedOn, "ghost"});
  EXPECT_EQ(code_of([&] { validate_job(j, no_jobs); }), Errc::dangling_preselection_ref);
  EXPECT_NO_THROW(validate_job(j, [](const std::string& id) { return id == "ghost"; }));
}

TEST(ValidateJob, RejectsMissingPieces) {
  Job j = espresso_job();
  j.title.clear();
  EXPECT_EQ(code_of([&] { validate_job(j, no_jobs); }), Errc::missing_field);
  j = espresso_job();
  j.fields.clear();
  EXPECT_EQ(code_of([&] { validate_job(j, no_jobs); }), Errc::missing_field);
  j = espresso_job();
  j.min_judgments = 0;
  EXPECT_EQ(code_of([&] { validate_job(j, no_jobs); }), Errc::invalid_argument);
  j = espresso_job();
  j.fields.push_back(j.fields.front());
  EXPECT_EQ(code_of([&] { validate_job(j, no_jobs); }), Errc::invalid_argument);
}

TEST(ValidateJob, RuleMustFitFieldKind) {
  Job j = espresso_job();
  j.similarity.rules["relation"] = SetJaccard{0.5, false};
  EXPECT_EQ(code_of([&] { validate_job(j, no_jobs); }), Errc::kind_mismatch);
  j.similarity.rules["relation"] = CaseInsensitiveEquality{};
  EXPECT_NO_THROW(validate_job(j, no_jobs));
  j.similarity.rules["nope"] = ExactEquality{};
  EXPECT_EQ(code_of([&] { validate_job(j, no_jobs); }), Errc::invalid_argument);
}

TEST(JudgmentDuration, Examples) {
  EXPECT_DOUBLE_EQ(judgment_duration(timed("2014-05-12T10:00:00Z", "2014-05-12T10:01:27Z")), 87.0);
  EXPECT_DOUBLE_EQ(judgment_duration(timed("2014-05-12T10:00:00Z", "2014-05-12T10:00:00Z")), 0.0);
  EXPECT_DOUBLE_EQ(judgment_duration(timed("2014-05-12T10:00:05.5Z", "2014-05-12T10:00:15.5Z")), 10.0);
  EXPECT_EQ(code_of([] { judgment_duration(timed("2014-05-12T10:00:01Z", "2014-05-12T10:00:00Z")); }),
            Errc::negative_duration);
}

TEST(Time, Rfc3339) {
  EXPECT_EQ(parse_rfc3339("2014-05-12T09:00:00Z").millis, 1399885200000);
  EXPECT_EQ(parse_rfc3339("2014-05-12T11:00:00+02:00").millis, 1399885200000);
  EXPECT_EQ(parse_rfc3339("2014-05-12T08:30:00-00:30").millis, 1399885200000);
  EXPECT_EQ(to_rfc3339(Timestamp{1399885200000}), "2014-05-12T09:00:00Z");
  EXPECT_EQ(to_rfc3339(Timestamp{1399885200500}), "2014-05-12T09:00:00.500Z");
  for (const char* bad : {"2014-05-12", "2014-05-12T09:00:00", "2014-13-01T00:00:00Z", "yesterday"})
    EXPECT_EQ(code_of([&] { parse_rfc3339(bad); }), Errc::invalid_argument) << bad;
}

TEST(Time, RoundTripProperty) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> d(0, 4'102'444'800'000);  // up to 2100
  for (int i = 0; i < 2000; ++i) {
    const Timestamp t{d(rng)};
    EXPECT_EQ(parse_rfc3339(to_rfc3339(t)), t);
  }
}

TEST(Json, ValueKinds) {
  EXPECT_EQ(json(Value("yes")), json("yes"));
  EXPECT_EQ(json(Value(2.5)), json(2.5));
  EXPECT_EQ(json(Value(Value::List{"a", "b"})), json({"a", "b"}));
  EXPECT_EQ(json("x").get<Value>().kind(), ValueKind::Text);
  EXPECT_EQ(json(4).get<Value>().kind(), ValueKind::Number);
  EXPECT_EQ(json({"a"}).get<Value>().kind(), ValueKind::List);
}

TEST(Json, JobRoundTrip) {
  Job j = espresso_job();
  j.similarity.rules["relation"] = CaseInsensitiveEquality{};
  j.preselection.push_back({PreselectionKind::DidNotWorkOn, "skilltest"});
  j.mistake_limit = 2;
  j.status = JobStatus::Published;
  j.input_source = "csv";
  const Job back = json(j).get<Job>();
  EXPECT_EQ(back, j);
}

TEST(Json, UnitAndJudgmentRoundTrip) {
  Unit u;
  u.id = "u000001";
  u.job_id = "j";
  u.payload = {{"text", "Il Duomo"}};
  u.gold = ValueMap{{"tags", Value(Value::List{"duomo", "church"})}};
  u.state = UnitState::Finalized;
  u.agreed = ValueMap{{"tags", Value(Value::List{"duomo"})}};
  u.support = 3;
  u.judgments = 4;
  EXPECT_EQ(json(u).get<Unit>(), u);

  Judgment jd;
  jd.id = "j:u000001:w1";
  jd.job_id = "j";
  jd.unit_id = "u000001";
  jd.worker_id = "w1";
  jd.instance_id = "j:w1:1";
  jd.values = {{"tags", Value(Value::List{"a", "b", "c"})}, {"n", Value(3)}};
  jd.context = ContextLabel::bus;
  jd.started_at = Timestamp{1000};
  jd.submitted_at = Timestamp{88000};
  jd.gold_outcome = GoldOutcome::Incorrect;
  jd.flagged = true;
  EXPECT_EQ(json(jd).get<Judgment>(), jd);
}

TEST(Json, JobMissingCategoryIsAnError) {
  json j = json(espresso_job());
  j.erase("category");
  EXPECT_EQ(code_of([&] { j.get<Job>(); }), Errc::missing_field);
}
