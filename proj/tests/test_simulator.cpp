#include <gtest/gtest.h>

#include "support.hpp"

using namespace crowdcafe;
using namespace testing_support;

namespace {

std::string small_job(Store& s, int units, int gold, int mistake_limit = 0) {
  Platform platform(s, fixture_feeds(), PlatformConfig{});
  const Job job = platform.create_job(kKitchen, tagging_draft(3, mistake_limit));
  platform.attach_feed(kKitchen, job.id, FeedQuery("fixture", "#trento", units));
  if (gold > 0) platform.add_gold(kKitchen, job.id, truth_gold(job, gold));
  platform.publish(kKitchen, job.id);
  return job.id;
}

SimConfig config(int workers, double accuracy, std::uint64_t seed = 1) {
  SimConfig c;
  c.workers = workers;
  c.accuracy = accuracy;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Fnv, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(SimulatedTruth, StableAndShaped) {
  const Job job = tagging_draft().get<Job>();
  const Payload p{{"media_url", "https://media.example.org/trento/0001.jpg"}};
  const ValueMap a = simulated_truth(job, p);
  EXPECT_EQ(a, simulated_truth(job, p));
  ASSERT_EQ(a.at("tags").list().size(), 3u);
  const Payload q{{"media_url", "https://media.example.org/trento/0002.jpg"}};
  EXPECT_NE(a, simulated_truth(job, q));
}

TEST(Simulate, SmallRunCoversAndIsReproducible) {
  Store a, b;
  small_job(a, 30, 3);
  small_job(b, 30, 3);
  const SimReport ra = simulate(a, config(6, 1.0));
  const SimReport rb = simulate(b, config(6, 1.0));
  EXPECT_EQ(ra.hash, rb.hash);
  EXPECT_EQ(to_json(ra), to_json(rb));
  EXPECT_TRUE(ra.coverage_ok);
  EXPECT_TRUE(ra.conservation_ok);
  EXPECT_EQ(ra.duplicate_judgments, 0);
  EXPECT_EQ(ra.units_total, 30);
  EXPECT_EQ(ra.units_finalized, 30);
  EXPECT_EQ(ra.units_no_agreement, 0);
  EXPECT_EQ(ra.bans, 0);
  EXPECT_GE(ra.min_counted_judgments, 3);
  EXPECT_EQ(ra.payouts.value, 3 * ra.submissions);
  EXPECT_EQ(ra.hash.size(), 16u);

  const SimReport other = simulate(b, config(6, 1.0, 2));
  EXPECT_EQ(other.submissions, 0);  // b is already covered; nothing left to claim
}

TEST(Simulate, DifferentSeedDifferentRun) {
  Store a, b;
  small_job(a, 30, 3);
  small_job(b, 30, 3);
  EXPECT_NE(simulate(a, config(6, 0.9, 1)).hash, simulate(b, config(6, 0.9, 7)).hash);
}

TEST(Simulate, HopelessWorkersAreAllBanned) {
  Store s;
  small_job(s, 30, 5);
  const SimReport r = simulate(s, config(5, 0.0));
  EXPECT_EQ(r.bans, 5);
  EXPECT_EQ(r.submissions, 5);
  EXPECT_EQ(r.payouts.value, 0);
  EXPECT_FALSE(r.coverage_ok);
  EXPECT_TRUE(r.conservation_ok);
}

TEST(Simulate, NeedsPublishedJobs) {
  Store s;
  try {
    simulate(s, config(2, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::no_published_jobs);
  }
  EXPECT_THROW(simulate(s, config(0, 1.0)), Error);
  EXPECT_THROW(simulate(s, config(2, 1.5)), Error);
}

TEST(Simulate, ParallelRunKeepsInvariants) {
  Store s;
  small_job(s, 60, 3);
  SimConfig c = config(8, 1.0);
  c.parallelism = 4;
  const SimReport r = simulate(s, c);
  EXPECT_TRUE(r.coverage_ok);
  EXPECT_TRUE(r.conservation_ok);
  EXPECT_EQ(r.duplicate_judgments, 0);
}
