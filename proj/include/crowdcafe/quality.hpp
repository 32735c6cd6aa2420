#pragma once

// Gold-based quality control and agreement finding.

#include <span>
#include <string>

#include "crowdcafe/model.hpp"

namespace crowdcafe {

// Per (worker, job) gold counters. Counters only ever grow.
struct WorkerQualityState {
  std::string worker_id;
  std::string job_id;
  int n_incorrect = 0;
  int n_correct = 0;
  bool banned = false;
  bool operator==(const WorkerQualityState&) const = default;
};

void to_json(json& j, const WorkerQualityState& s);
void from_json(const json& j, WorkerQualityState& s);

/// Chance of placing a gold unit into the worker's next instance:
///
///   p = (1 + n_incorrect) / (1 + n_incorrect + n_correct)
///
/// Always in (0, 1]; 1 exactly when the worker has no correct gold answers.
double gold_injection_probability(const WorkerQualityState& state);

/// Unicode simple case folding of UTF-8 text.
std::string fold_case(std::string_view utf8);

/// Symmetric similarity under one field rule. Throws KindMismatch when the
/// value kinds do not fit the rule or each other.
bool similar(const Value& a, const Value& b, const SimilarityRule& rule);

/// All-field similarity of two answer maps. A field present on only one side
/// is a mismatch.
bool similar_answers(const ValueMap& a, const ValueMap& b, const SimilaritySpec& spec);

/// Scores a gold judgment, sets its gold_outcome and bumps exactly one
/// counter of `state`. Throws MissingAnswerField before touching anything.
GoldOutcome evaluate_gold(Judgment& judgment, const ValueMap& gold, const SimilaritySpec& spec,
                          WorkerQualityState& state);

enum class BanStatus { Active, Banned };

/// Banned iff n_incorrect > limit. Bans are sticky: once banned, stays banned.
BanStatus apply_mistake_limit(WorkerQualityState& state, int limit);

struct AggregationResult {
  enum class Kind { Pending, Agreed, NoAgreement };
  Kind kind = Kind::Pending;
  int count = 0;    // judgments considered
  int support = 0;  // size of the winning cluster when Agreed
  ValueMap value;   // canonical answer when Agreed

  static AggregationResult pending(int n) { return {Kind::Pending, n, 0, {}}; }
  static AggregationResult no_agreement(int n) { return {Kind::NoAgreement, n, 0, {}}; }
};

/// Clusters judgments of one unit by single-linkage over similar_answers().
/// A cluster holding a strict majority wins; its earliest-submitted member
/// supplies the agreed value. Below min_judgments the result is Pending.
///
/// Errors: MixedUnits, DuplicateWorker.
AggregationResult aggregate_unit(std::span<const Judgment> judgments, const SimilaritySpec& spec,
                                 int min_judgments);

}  // namespace crowdcafe
