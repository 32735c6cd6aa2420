#include "crowdcafe/quality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

namespace crowdcafe {

void to_json(json& j, const WorkerQualityState& s) {
  j = json{{"worker_id", s.worker_id}, {"job_id", s.job_id}, {"n_incorrect", s.n_incorrect},
           {"n_correct", s.n_correct},  {"banned", s.banned}};
}

void from_json(const json& j, WorkerQualityState& s) {
  s.worker_id = j.at("worker_id").get<std::string>();
  s.job_id = j.at("job_id").get<std::string>();
  s.n_incorrect = j.value("n_incorrect", 0);
  s.n_correct = j.value("n_correct", 0);
  s.banned = j.value("banned", false);
}

double gold_injection_probability(const WorkerQualityState& state) {
  const double incorrect = state.n_incorrect;
  const double correct = state.n_correct;
  return (1.0 + incorrect) / (1.0 + incorrect + correct);
}

std::string fold_case(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  const auto* s = reinterpret_cast<const std::uint8_t*>(utf8.data());
  const std::int32_t length = static_cast<std::int32_t>(utf8.size());
  std::int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) c = 0xFFFD;
    c = u_foldCase(c, U_FOLD_CASE_DEFAULT);
    std::uint8_t buf[U8_MAX_LENGTH];
    std::int32_t n = 0;
    UBool err = false;
    U8_APPEND(buf, n, U8_MAX_LENGTH, c, err);
    if (err) continue;
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
  }
  return out;
}

namespace {

[[noreturn]] void kind_mismatch(const SimilarityRule& rule, const Value& a, const Value& b) {
  throw Error(Errc::kind_mismatch, std::string(rule_name(rule)) + " on " + std::string(to_string(a.kind())) +
                                       "/" + std::string(to_string(b.kind())));
}

double jaccard(const Value::List& a, const Value::List& b, bool fold) {
  std::set<std::string> sa, sb;
  for (const auto& x : a) sa.insert(fold ? fold_case(x) : x);
  for (const auto& x : b) sb.insert(fold ? fold_case(x) : x);
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : sa) inter += sb.count(x);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

bool similar(const Value& a, const Value& b, const SimilarityRule& rule) {
  if (a.kind() != b.kind()) kind_mismatch(rule, a, b);
  if (std::holds_alternative<ExactEquality>(rule)) return a.canonical() == b.canonical();
  if (std::holds_alternative<CaseInsensitiveEquality>(rule)) {
    if (a.kind() != ValueKind::Text) kind_mismatch(rule, a, b);
    return fold_case(a.text()) == fold_case(b.text());
  }
  if (const auto* tol = std::get_if<NumericTolerance>(&rule)) {
    if (a.kind() != ValueKind::Number) kind_mismatch(rule, a, b);
    return std::fabs(a.number() - b.number()) <= tol->epsilon;
  }
  const auto& jac = std::get<SetJaccard>(rule);
  if (a.kind() != ValueKind::List) kind_mismatch(rule, a, b);
  return jaccard(a.list(), b.list(), jac.fold_case) >= jac.threshold;
}

bool similar_answers(const ValueMap& a, const ValueMap& b, const SimilaritySpec& spec) {
  if (a.size() != b.size()) return false;
  for (const auto& [field, va] : a) {
    auto it = b.find(field);
    if (it == b.end()) return false;
    if (!similar(va, it->second, spec.rule_for(field))) return false;
  }
  return true;
}

GoldOutcome evaluate_gold(Judgment& judgment, const ValueMap& gold, const SimilaritySpec& spec,
                          WorkerQualityState& state) {
  for (const auto& [field, _] : gold)
    if (!judgment.values.count(field)) throw Error(Errc::missing_answer_field, field);

  bool correct = true;
  for (const auto& [field, expected] : gold) {
    const Value& given = judgment.values.at(field);
    if (given.kind() != expected.kind() || !similar(given, expected, spec.rule_for(field))) {
      correct = false;
      break;
    }
  }
  const GoldOutcome outcome = correct ? GoldOutcome::Correct : GoldOutcome::Incorrect;
  judgment.gold_outcome = outcome;
  if (correct) {
    ++state.n_correct;
  } else {
    ++state.n_incorrect;
  }
  return outcome;
}

BanStatus apply_mistake_limit(WorkerQualityState& state, int limit) {
  if (state.n_incorrect > limit) state.banned = true;
  return state.banned ? BanStatus::Banned : BanStatus::Active;
}

AggregationResult aggregate_unit(std::span<const Judgment> judgments, const SimilaritySpec& spec,
                                 int min_judgments) {
  std::set<std::string> workers;
  for (const auto& j : judgments) {
    if (j.unit_id != judgments.front().unit_id) throw Error(Errc::mixed_units, j.unit_id);
    if (!workers.insert(j.worker_id).second) throw Error(Errc::duplicate_worker, j.worker_id);
  }
  const int count = static_cast<int>(judgments.size());
  if (count < min_judgments) return AggregationResult::pending(count);
  if (count == 0) return AggregationResult::no_agreement(0);

  // union-find over the similarity graph
  std::vector<std::size_t> parent(judgments.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < judgments.size(); ++a)
    for (std::size_t b = a + 1; b < judgments.size(); ++b)
      if (find(a) != find(b) && similar_answers(judgments[a].values, judgments[b].values, spec))
        parent[find(a)] = find(b);

  std::vector<int> size(judgments.size(), 0);
  for (std::size_t i = 0; i < judgments.size(); ++i) ++size[find(i)];
  const std::size_t best = static_cast<std::size_t>(std::max_element(size.begin(), size.end()) - size.begin());
  if (2 * size[best] <= count) return AggregationResult::no_agreement(count);

  const Judgment* canonical = nullptr;
  for (std::size_t i = 0; i < judgments.size(); ++i) {
    if (find(i) != best) continue;
    const Judgment& j = judgments[i];
    if (!canonical || std::tie(j.submitted_at, j.id) < std::tie(canonical->submitted_at, canonical->id))
      canonical = &j;
  }
  return AggregationResult{AggregationResult::Kind::Agreed, count, size[best], canonical->values};
}

}  // namespace crowdcafe
