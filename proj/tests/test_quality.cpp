#include <gtest/gtest.h>

#include <random>

#include "crowdcafe/quality.hpp"

using namespace crowdcafe;

namespace {

WorkerQualityState counters(int incorrect, int correct) {
  WorkerQualityState s;
  s.worker_id = "w";
  s.job_id = "j";
  s.n_incorrect = incorrect;
  s.n_correct = correct;
  return s;
}

Value tags(std::initializer_list<const char*> items) {
  Value::List l;
  for (const char* s : items) l.emplace_back(s);
  return Value(std::move(l));
}

Judgment answer(const std::string& worker, ValueMap values, std::int64_t at, const std::string& unit = "u1") {
  Judgment j;
  j.id = "j:" + unit + ":" + worker;
  j.job_id = "j";
  j.unit_id = unit;
  j.worker_id = worker;
  j.values = std::move(values);
  j.started_at = Timestamp{at};
  j.submitted_at = Timestamp{at};
  return j;
}

}  // namespace

TEST(GoldProbability, Examples) {
  EXPECT_NEAR(gold_injection_probability(counters(0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(gold_injection_probability(counters(1, 3)), 0.4, 1e-12);
  EXPECT_NEAR(gold_injection_probability(counters(0, 9)), 0.1, 1e-12);
}

TEST(GoldProbability, RangeAndMonotonicity) {
  for (int i = 0; i <= 50; ++i) {
    for (int c = 0; c <= 50; ++c) {
      const double p = gold_injection_probability(counters(i, c));
      EXPECT_GT(p, 0.0);
      EXPECT_LE(p, 1.0);
      EXPECT_EQ(p == 1.0, c == 0);
      if (c < 50) {
        EXPECT_GT(p, gold_injection_probability(counters(i, c + 1)));
      }
      if (i < 50 && c > 0) {
        EXPECT_LT(p, gold_injection_probability(counters(i + 1, c)));
      }
    }
  }
}

TEST(Similar, Examples) {
  EXPECT_TRUE(similar(Value("yes"), Value("yes"), ExactEquality{}));
  EXPECT_FALSE(similar(Value("yes"), Value("Yes"), ExactEquality{}));
  EXPECT_TRUE(similar(Value("yes"), Value("YES"), CaseInsensitiveEquality{}));
  EXPECT_TRUE(similar(Value(1.004), Value(1.0), NumericTolerance{0.01}));
  EXPECT_FALSE(similar(Value(1.02), Value(1.0), NumericTolerance{0.01}));
  EXPECT_TRUE(similar(tags({"a", "b", "c"}), tags({"b", "c", "d"}), SetJaccard{0.5, false}));
  EXPECT_FALSE(similar(tags({"a", "b", "c"}), tags({"b", "c", "d"}), SetJaccard{0.6, false}));
  EXPECT_TRUE(similar(tags({}), tags({}), SetJaccard{1.0, false}));
  EXPECT_TRUE(similar(tags({"a", "a"}), tags({"a"}), SetJaccard{1.0, false}));
}

TEST(Similar, KindMismatch) {
  EXPECT_THROW(similar(Value("1"), Value(1), ExactEquality{}), Error);
  EXPECT_THROW(similar(Value("a"), Value("a"), SetJaccard{0.5, false}), Error);
  EXPECT_THROW(similar(Value(1), Value(1), CaseInsensitiveEquality{}), Error);
}

TEST(Similar, SymmetryProperty) {
  std::mt19937 rng(17);
  const char* pool[] = {"duomo", "Duomo", "sky", "mountains", "river", "DUOMO"};
  auto random_tags = [&] {
    Value::List l;
    const int n = static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) l.emplace_back(pool[rng() % 6]);
    return Value(std::move(l));
  };
  for (int i = 0; i < 1000; ++i) {
    const Value a = random_tags(), b = random_tags();
    const SetJaccard rule{0.1 + 0.1 * (rng() % 10), (rng() % 2) == 1};
    EXPECT_EQ(similar(a, b, rule), similar(b, a, rule));
    EXPECT_TRUE(similar(a, a, rule));
    const double x = (rng() % 1000) / 10.0, y = (rng() % 1000) / 10.0;
    EXPECT_EQ(similar(Value(x), Value(y), NumericTolerance{5}), similar(Value(y), Value(x), NumericTolerance{5}));
  }
}

TEST(FoldCase, Unicode) {
  EXPECT_EQ(fold_case("Duomo"), "duomo");
  EXPECT_EQ(fold_case("\xC3\x84PFEL"), "\xC3\xA4pfel");  // ÄPFEL
  EXPECT_EQ(fold_case("\xCE\xA3\xCE\x91"), "\xCF\x83\xCE\xB1");  // ΣΑ
  EXPECT_EQ(fold_case(""), "");
}

TEST(Gold, ExactOutcomes) {
  SimilaritySpec spec;
  auto s = counters(0, 0);
  Judgment ok = answer("w", {{"relation", Value("yes")}}, 0);
  EXPECT_EQ(evaluate_gold(ok, {{"relation", Value("yes")}}, spec, s), GoldOutcome::Correct);
  EXPECT_EQ(ok.gold_outcome, GoldOutcome::Correct);
  EXPECT_EQ(s.n_correct, 1);
  EXPECT_EQ(s.n_incorrect, 0);

  Judgment bad = answer("w", {{"relation", Value("no")}}, 0);
  EXPECT_EQ(evaluate_gold(bad, {{"relation", Value("yes")}}, spec, s), GoldOutcome::Incorrect);
  EXPECT_EQ(s.n_correct, 1);
  EXPECT_EQ(s.n_incorrect, 1);
}

TEST(Gold, JaccardWithFolding) {
  SimilaritySpec spec;
  spec.rules["tags"] = SetJaccard{0.5, true};
  auto s = counters(0, 0);
  Judgment j = answer("w", {{"tags", tags({"Duomo", "mountains", "sky"})}}, 0);
  EXPECT_EQ(evaluate_gold(j, {{"tags", tags({"duomo", "mountains"})}}, spec, s), GoldOutcome::Correct);
  spec.rules["tags"] = SetJaccard{0.5, false};
  Judgment k = answer("w", {{"tags", tags({"Duomo", "mountains", "sky"})}}, 0);
  EXPECT_EQ(evaluate_gold(k, {{"tags", tags({"duomo", "mountains"})}}, spec, s), GoldOutcome::Incorrect);
}

TEST(Gold, MissingFieldTouchesNothing) {
  auto s = counters(2, 5);
  Judgment j = answer("w", {{"other", Value("yes")}}, 0);
  try {
    evaluate_gold(j, {{"relation", Value("yes")}}, SimilaritySpec{}, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_answer_field);
  }
  EXPECT_EQ(s, counters(2, 5));
  EXPECT_FALSE(j.gold_outcome.has_value());
}

TEST(MistakeLimit, Examples) {
  auto s = counters(1, 0);
  EXPECT_EQ(apply_mistake_limit(s, 0), BanStatus::Banned);
  s = counters(0, 0);
  EXPECT_EQ(apply_mistake_limit(s, 0), BanStatus::Active);
  s = counters(2, 0);
  EXPECT_EQ(apply_mistake_limit(s, 2), BanStatus::Active);
  s = counters(3, 0);
  EXPECT_EQ(apply_mistake_limit(s, 2), BanStatus::Banned);
}

TEST(MistakeLimit, BansAreSticky) {
  auto s = counters(1, 0);
  EXPECT_EQ(apply_mistake_limit(s, 0), BanStatus::Banned);
  EXPECT_TRUE(s.banned);
  EXPECT_EQ(apply_mistake_limit(s, 10), BanStatus::Banned);
}

TEST(Aggregate, Examples) {
  SimilaritySpec spec;
  std::vector<Judgment> all_yes{answer("a", {{"r", Value("yes")}}, 1), answer("b", {{"r", Value("yes")}}, 2),
                                answer("c", {{"r", Value("yes")}}, 3)};
  auto r = aggregate_unit(all_yes, spec, 3);
  EXPECT_EQ(r.kind, AggregationResult::Kind::Agreed);
  EXPECT_EQ(r.support, 3);
  EXPECT_EQ(r.value.at("r"), Value("yes"));

  std::vector<Judgment> two_one{answer("a", {{"r", Value("yes")}}, 1), answer("b", {{"r", Value("no")}}, 2),
                                answer("c", {{"r", Value("yes")}}, 3)};
  r = aggregate_unit(two_one, spec, 3);
  EXPECT_EQ(r.kind, AggregationResult::Kind::Agreed);
  EXPECT_EQ(r.support, 2);
  EXPECT_EQ(r.value.at("r"), Value("yes"));

  r = aggregate_unit(std::span(all_yes).first(2), spec, 3);
  EXPECT_EQ(r.kind, AggregationResult::Kind::Pending);
  EXPECT_EQ(r.count, 2);
}

TEST(Aggregate, TieIsNoAgreement) {
  std::vector<Judgment> js{answer("a", {{"r", Value("yes")}}, 1), answer("b", {{"r", Value("no")}}, 2),
                           answer("c", {{"r", Value("yes")}}, 3), answer("d", {{"r", Value("no")}}, 4)};
  EXPECT_EQ(aggregate_unit(js, SimilaritySpec{}, 3).kind, AggregationResult::Kind::NoAgreement);
  std::vector<Judgment> spread{answer("a", {{"r", Value("x")}}, 1), answer("b", {{"r", Value("y")}}, 2),
                               answer("c", {{"r", Value("z")}}, 3)};
  EXPECT_EQ(aggregate_unit(spread, SimilaritySpec{}, 3).kind, AggregationResult::Kind::NoAgreement);
}

TEST(Aggregate, EarliestMemberIsCanonical) {
  SimilaritySpec spec;
  spec.rules["r"] = CaseInsensitiveEquality{};
  std::vector<Judgment> js{answer("a", {{"r", Value("YES")}}, 5), answer("b", {{"r", Value("yes")}}, 2),
                           answer("c", {{"r", Value("Yes")}}, 9)};
  const auto r = aggregate_unit(js, spec, 3);
  ASSERT_EQ(r.kind, AggregationResult::Kind::Agreed);
  EXPECT_EQ(r.value.at("r"), Value("yes"));
}

TEST(Aggregate, SingleLinkageChains) {
  // a~b and b~c (Jaccard 1/3) but a and c are disjoint: one cluster of 3.
  SimilaritySpec spec;
  std::vector<Judgment> js{answer("a", {{"t", tags({"1", "2"})}}, 1), answer("b", {{"t", tags({"2", "3"})}}, 2),
                           answer("c", {{"t", tags({"3", "4"})}}, 3), answer("d", {{"t", tags({"9"})}}, 4)};
  spec.rules["t"] = SetJaccard{0.3, false};
  const auto r = aggregate_unit(js, spec, 3);
  ASSERT_EQ(r.kind, AggregationResult::Kind::Agreed);
  EXPECT_EQ(r.support, 3);
}

TEST(Aggregate, Errors) {
  std::vector<Judgment> mixed{answer("a", {{"r", Value("yes")}}, 1), answer("b", {{"r", Value("yes")}}, 2, "u2")};
  try {
    aggregate_unit(mixed, SimilaritySpec{}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::mixed_units);
  }
  std::vector<Judgment> dup{answer("a", {{"r", Value("yes")}}, 1), answer("a", {{"r", Value("yes")}}, 2)};
  try {
    aggregate_unit(dup, SimilaritySpec{}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::duplicate_worker);
  }
}

TEST(Aggregate, MajorityProperty) {
  // Oracle: with exact equality the clusters are the distinct values, so the
  // result is Agreed iff the most frequent value occurs more than n/2 times.
  std::mt19937 rng(23);
  for (int round = 0; round < 500; ++round) {
    const int n = 1 + static_cast<int>(rng() % 9);
    std::vector<Judgment> js;
    std::map<std::string, int> freq;
    for (int i = 0; i < n; ++i) {
      const std::string v(1, static_cast<char>('a' + rng() % 3));
      ++freq[v];
      js.push_back(answer("w" + std::to_string(i), {{"r", Value(v)}}, i));
    }
    int best = 0;
    for (const auto& [v, c] : freq) best = std::max(best, c);
    const auto r = aggregate_unit(js, SimilaritySpec{}, 1);
    if (2 * best > n) {
      ASSERT_EQ(r.kind, AggregationResult::Kind::Agreed);
      EXPECT_EQ(r.support, best);
      EXPECT_EQ(freq.at(r.value.at("r").text()), best);
    } else {
      EXPECT_EQ(r.kind, AggregationResult::Kind::NoAgreement);
    }
  }
}
