#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "crowdcafe/analytics.hpp"
#include "kappa_oracle.hpp"

using namespace crowdcafe;
using testing_support::oracle_kappa;
using testing_support::random_counts;

namespace {

Judgment tagged(const std::string& id, std::size_t n_tags, ContextLabel ctx = ContextLabel::unspecified) {
  Judgment j;
  j.id = id;
  j.unit_id = "u" + id;
  Value::List l;
  for (std::size_t i = 0; i < n_tags; ++i) l.push_back("t" + std::to_string(i));
  j.values["tags"] = Value(l);
  j.context = ctx;
  return j;
}

Judgment rated(const std::string& unit, const std::string& worker, const std::string& label, std::int64_t at) {
  Judgment j;
  j.id = unit + ":" + worker;
  j.unit_id = unit;
  j.worker_id = worker;
  j.values["relation"] = Value(label);
  j.submitted_at = Timestamp{at};
  return j;
}

}  // namespace

TEST(Kappa, PerfectAgreement) {
  const RatingMatrix m({{3, 0, 0}, {0, 3, 0}, {0, 0, 3}, {3, 0, 0}});
  EXPECT_NEAR(fleiss_kappa(m).kappa, 1.0, 1e-9);
}

TEST(Kappa, HandWorkedTwoSubjects) {
  // P1 = 1, P2 = 1/3, P-bar = 2/3; p = (2/3, 1/3), Pe = 5/9; kappa = (1/9)/(4/9).
  const auto k = fleiss_kappa(RatingMatrix({{3, 0}, {1, 2}}));
  EXPECT_NEAR(k.kappa, 0.25, 1e-9);
  EXPECT_NEAR(k.p_bar, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(k.p_e, 5.0 / 9.0, 1e-12);
  EXPECT_NEAR(*oracle_kappa({{3, 0}, {1, 2}}), 0.25, 1e-12);
}

TEST(Kappa, FleissTextbookTable) {
  // The 10 subjects x 14 raters x 5 categories table from Fleiss (1971).
  const std::vector<std::vector<int>> t{{0, 0, 0, 0, 14}, {0, 2, 6, 4, 2}, {0, 0, 3, 5, 6}, {0, 3, 9, 2, 0},
                                        {2, 2, 8, 1, 1},  {7, 7, 0, 0, 0}, {3, 2, 6, 3, 0}, {2, 5, 3, 2, 2},
                                        {6, 5, 2, 1, 0},  {0, 2, 2, 3, 7}};
  EXPECT_NEAR(fleiss_kappa(RatingMatrix(t)).kappa, 0.20993, 5e-5);
  EXPECT_NEAR(fleiss_kappa(RatingMatrix(t)).kappa, *oracle_kappa(t), 1e-9);
}

TEST(Kappa, MatchesOracleOnRandomMatrices) {
  std::mt19937_64 rng(2014);
  int checked = 0;
  while (checked < 300) {
    const std::size_t subjects = 1 + rng() % 20;
    const int raters = 2 + static_cast<int>(rng() % 5);
    const std::size_t cats = 2 + rng() % 4;
    const auto counts = random_counts(rng, subjects, raters, cats);
    const auto expected = oracle_kappa(counts);
    if (!expected) continue;
    EXPECT_NEAR(fleiss_kappa(RatingMatrix(counts)).kappa, *expected, 1e-9);
    ++checked;
  }
}

TEST(Kappa, SingleCategoryIsDegenerate) {
  const auto k = fleiss_kappa(RatingMatrix({{3, 0}, {3, 0}}));
  EXPECT_DOUBLE_EQ(k.kappa, 1.0);
  EXPECT_DOUBLE_EQ(k.standard_error, 0.0);
}

TEST(Kappa, UniformRatingsNearZero) {
  std::mt19937_64 rng(99);
  const auto k = fleiss_kappa(RatingMatrix(random_counts(rng, 2000, 5, 4)));
  EXPECT_LT(std::fabs(k.kappa), 0.05);
  EXPECT_GT(k.p_value, 0.001);
}

TEST(Kappa, NullStandardErrorMatchesSimulation) {
  // Under independent uniform ratings the spread of kappa across replicates
  // should match the analytic null SE.
  std::mt19937_64 rng(4);
  const int reps = 400;
  std::vector<double> ks;
  double se = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto k = fleiss_kappa(RatingMatrix(random_counts(rng, 150, 4, 3)));
    ks.push_back(k.kappa);
    se += k.standard_error;
  }
  se /= reps;
  double mean = 0.0;
  for (double k : ks) mean += k;
  mean /= reps;
  double var = 0.0;
  for (double k : ks) var += (k - mean) * (k - mean);
  const double sd = std::sqrt(var / (reps - 1));
  EXPECT_NEAR(sd / se, 1.0, 0.15);
}

TEST(Kappa, ConfidenceIntervalBracketsEstimate) {
  const auto k = fleiss_kappa(RatingMatrix({{2, 1}, {0, 3}, {3, 0}, {1, 2}, {3, 0}}));
  EXPECT_LE(k.ci_low, k.kappa);
  EXPECT_GE(k.ci_high, k.kappa);
  EXPECT_GE(k.p_value, 0.0);
  EXPECT_LE(k.p_value, 1.0);
}

TEST(RatingMatrix, Errors) {
  try {
    RatingMatrix({{3, 0}, {1, 1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ragged_matrix);
  }
  try {
    RatingMatrix({{3, 0}, {1, 1, 1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ragged_matrix);
  }
  try {
    RatingMatrix({{1, 0}, {0, 1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::too_few_raters);
  }
  EXPECT_THROW(RatingMatrix(std::vector<std::vector<int>>{}), Error);
  EXPECT_THROW(RatingMatrix(std::vector<std::vector<int>>{{3}}), Error);
}

TEST(RatingMatrix, FromJudgmentsKeepsEarliestRaters) {
  std::vector<Judgment> js{rated("u1", "a", "yes", 1), rated("u1", "b", "yes", 2), rated("u1", "c", "no", 3),
                           rated("u1", "d", "no", 0),  rated("u2", "a", "no", 1),  rated("u2", "b", "no", 2),
                           rated("u2", "c", "no", 3),  rated("u3", "a", "yes", 1)};
  const auto lm = rating_matrix_from_judgments(js, "relation", 3);
  ASSERT_EQ(lm.subjects, (std::vector<std::string>{"u1", "u2"}));
  ASSERT_EQ(lm.categories.size(), 2u);
  // u1 keeps d(no), a(yes), b(yes)
  const std::size_t no = lm.categories[0] == Value("no").canonical() ? 0 : 1;
  EXPECT_EQ(lm.matrix.count(0, no), 1);
  EXPECT_EQ(lm.matrix.count(0, 1 - no), 2);
  EXPECT_EQ(lm.matrix.count(1, no), 3);
}

TEST(RatingMatrix, FromJudgmentsSingleLabel) {
  std::vector<Judgment> js{rated("u1", "a", "yes", 1), rated("u1", "b", "yes", 2), rated("u2", "a", "yes", 1),
                           rated("u2", "b", "yes", 2)};
  const auto lm = rating_matrix_from_judgments(js, "relation", 2);
  EXPECT_EQ(lm.matrix.n_categories(), 2u);
  EXPECT_DOUBLE_EQ(fleiss_kappa(lm.matrix).kappa, 1.0);
}

TEST(RatingMatrix, ListLabelsIgnoreOrder) {
  std::vector<Judgment> js;
  for (const char* w : {"a", "b", "c"}) {
    Judgment j = rated("u1", w, "x", 1);
    j.values.clear();
    j.values["tags"] = std::string(w) == "b" ? Value::List{"y", "x"} : Value::List{"x", "y"};
    js.push_back(j);
  }
  const auto lm = rating_matrix_from_judgments(js, "tags", 3);
  EXPECT_EQ(lm.categories.front(), R"(["x","y"])");
  EXPECT_EQ(lm.matrix.count(0, 0), 3);
}

TEST(ExecutionStats, Examples) {
  const std::vector<double> a{1, 2, 3};
  auto s = execution_stats(a);
  EXPECT_DOUBLE_EQ(*s.mean, 2.0);
  EXPECT_DOUBLE_EQ(*s.median, 2.0);
  EXPECT_DOUBLE_EQ(*s.stddev, 1.0);

  const std::vector<double> one{5};
  s = execution_stats(one);
  EXPECT_DOUBLE_EQ(*s.mean, 5.0);
  EXPECT_DOUBLE_EQ(*s.median, 5.0);
  EXPECT_FALSE(s.stddev.has_value());

  const std::vector<double> flat{2, 2, 2, 2};
  EXPECT_DOUBLE_EQ(*execution_stats(flat).stddev, 0.0);

  const std::vector<double> even{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(*execution_stats(even).median, 2.5);

  s = execution_stats(std::vector<double>{});
  EXPECT_EQ(s.count, 0u);
  EXPECT_FALSE(s.mean.has_value());

  EXPECT_THROW(execution_stats(std::vector<double>{1, -1}), Error);
}

TEST(ContextDistribution, Examples) {
  std::vector<Judgment> js;
  for (int i = 0; i < 47; ++i) js.push_back(tagged("n" + std::to_string(i), 3));
  for (int i = 0; i < 30; ++i) js.push_back(tagged("w" + std::to_string(i), 3, ContextLabel::workplace));
  for (int i = 0; i < 23; ++i) js.push_back(tagged("b" + std::to_string(i), 3, ContextLabel::bus));
  const auto d = context_distribution(js);
  EXPECT_EQ(d.total, 100u);
  EXPECT_NEAR(d.unspecified_pct, 47.0, 1e-9);
  EXPECT_NEAR(d.labeled_pct.at("workplace"), 56.6, 0.05);
  EXPECT_NEAR(d.labeled_pct.at("bus"), 43.4, 0.05);

  std::vector<Judgment> none{tagged("a", 1), tagged("b", 1)};
  const auto u = context_distribution(none);
  EXPECT_DOUBLE_EQ(u.unspecified_pct, 100.0);
  EXPECT_TRUE(u.labeled_pct.empty());

  std::vector<Judgment> bus{tagged("a", 1, ContextLabel::bus), tagged("b", 1, ContextLabel::bus)};
  EXPECT_DOUBLE_EQ(context_distribution(bus).labeled_pct.at("bus"), 100.0);
}

TEST(Compliance, PaperFixture) {
  std::vector<Judgment> js;
  for (int i = 0; i < 791; ++i) js.push_back(tagged(std::to_string(i), i < 737 ? 3 + i % 4 : i % 3));
  EXPECT_NEAR(100.0 * compliance_rate(js, "tags"), 93.17, 0.01);
}

TEST(Compliance, Edges) {
  std::vector<Judgment> js{tagged("a", 3), tagged("b", 3)};
  EXPECT_DOUBLE_EQ(compliance_rate(js, "tags"), 1.0);
  std::vector<Judgment> short_ones{tagged("a", 0), tagged("b", 1)};
  EXPECT_DOUBLE_EQ(compliance_rate(short_ones, "tags", 0), 1.0);
  EXPECT_DOUBLE_EQ(compliance_rate(std::vector<Judgment>{}, "tags"), 1.0);
  try {
    compliance_rate(js, "relation");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::field_not_list);
  }
}
