#include "crowdcafe/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace crowdcafe {

RatingMatrix::RatingMatrix(std::vector<std::vector<int>> counts) : counts_(std::move(counts)) {
  if (counts_.empty()) throw Error(Errc::invalid_argument, "rating matrix has no subjects");
  const std::size_t width = counts_.front().size();
  if (width < 2) throw Error(Errc::invalid_argument, "rating matrix needs at least two categories");
  n_raters_ = -1;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    const auto& row = counts_[i];
    if (row.size() != width) throw Error(Errc::ragged_matrix, "row " + std::to_string(i) + " width");
    int sum = 0;
    for (int c : row) {
      if (c < 0) throw Error(Errc::invalid_argument, "negative count in row " + std::to_string(i));
      sum += c;
    }
    if (n_raters_ < 0) {
      n_raters_ = sum;
    } else if (sum != n_raters_) {
      throw Error(Errc::ragged_matrix, "row " + std::to_string(i) + " sums to " + std::to_string(sum) +
                                           ", expected " + std::to_string(n_raters_));
    }
  }
  if (n_raters_ < 2) throw Error(Errc::too_few_raters, std::to_string(n_raters_));
}

KappaResult fleiss_kappa(const RatingMatrix& m) {
  const double subjects = static_cast<double>(m.n_subjects());
  const double n = m.n_raters();
  const std::size_t k = m.n_categories();

  double p_bar = 0.0;
  std::vector<double> column(k, 0.0);
  for (const auto& row : m.rows()) {
    double sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      sq += static_cast<double>(row[j]) * row[j];
      column[j] += row[j];
    }
    p_bar += (sq - n) / (n * (n - 1.0));
  }
  p_bar /= subjects;

  double p_e = 0.0;
  double pq = 0.0;      // sum p_j q_j
  double pq_qp = 0.0;   // sum p_j q_j (q_j - p_j)
  for (double c : column) {
    const double p = c / (subjects * n);
    const double q = 1.0 - p;
    p_e += p * p;
    pq += p * q;
    pq_qp += p * q * (q - p);
  }

  KappaResult r;
  r.p_bar = p_bar;
  r.p_e = p_e;
  if (pq <= 0.0) {
    // every rating in one category: chance agreement is total
    r.kappa = 1.0;
    r.standard_error = 0.0;
    r.ci_low = r.ci_high = 1.0;
    r.z = 0.0;
    r.p_value = 1.0;
    return r;
  }
  r.kappa = (p_bar - p_e) / (1.0 - p_e);
  r.standard_error = std::sqrt(2.0) / (pq * std::sqrt(subjects * n * (n - 1.0))) *
                     std::sqrt(std::max(0.0, pq * pq - pq_qp));
  r.ci_low = r.kappa - 1.96 * r.standard_error;
  r.ci_high = r.kappa + 1.96 * r.standard_error;
  if (r.standard_error > 0.0) {
    r.z = r.kappa / r.standard_error;
    r.p_value = std::erfc(std::fabs(r.z) / std::sqrt(2.0));
  }
  return r;
}

namespace {

// Lists are compared as sets, so their items are sorted first.
std::string label_of(const Value& v) {
  if (v.kind() != ValueKind::List) return v.canonical();
  Value::List items = v.list();
  std::sort(items.begin(), items.end());
  return json(items).dump();
}

}  // namespace

LabeledMatrix rating_matrix_from_judgments(std::span<const Judgment> judgments, const std::string& field,
                                           int n_raters) {
  std::map<std::string, std::vector<const Judgment*>> by_unit;
  for (const auto& j : judgments) by_unit[j.unit_id].push_back(&j);

  std::set<std::string> labels;
  std::vector<std::pair<std::string, std::vector<std::string>>> kept;
  for (auto& [unit, list] : by_unit) {
    if (static_cast<int>(list.size()) < n_raters) continue;
    std::sort(list.begin(), list.end(), [](const Judgment* a, const Judgment* b) {
      return std::tie(a->submitted_at, a->id) < std::tie(b->submitted_at, b->id);
    });
    std::vector<std::string> row;
    for (int i = 0; i < n_raters; ++i) {
      auto it = list[i]->values.find(field);
      std::string label = it == list[i]->values.end() ? std::string("<missing>") : label_of(it->second);
      labels.insert(label);
      row.push_back(std::move(label));
    }
    kept.emplace_back(unit, std::move(row));
  }
  if (kept.empty()) throw Error(Errc::invalid_argument, "no unit has " + std::to_string(n_raters) + " judgments");

  std::vector<std::string> categories(labels.begin(), labels.end());
  if (categories.size() < 2) categories.push_back("<none>");
  std::vector<std::vector<int>> counts;
  std::vector<std::string> subjects;
  for (const auto& [unit, row] : kept) {
    std::vector<int> tally(categories.size(), 0);
    for (const auto& label : row) {
      const auto pos = std::lower_bound(categories.begin(), categories.end() - (labels.size() < 2 ? 1 : 0), label);
      ++tally[static_cast<std::size_t>(pos - categories.begin())];
    }
    counts.push_back(std::move(tally));
    subjects.push_back(unit);
  }
  return LabeledMatrix{RatingMatrix(std::move(counts)), std::move(categories), std::move(subjects)};
}

ExecutionStats execution_stats(std::span<const double> durations) {
  ExecutionStats s;
  s.count = durations.size();
  for (double d : durations)
    if (d < 0.0 || std::isnan(d)) throw Error(Errc::negative_duration, std::to_string(d));
  if (durations.empty()) return s;

  const double n = static_cast<double>(durations.size());
  const double mean = std::accumulate(durations.begin(), durations.end(), 0.0) / n;
  s.mean = mean;

  std::vector<double> sorted(durations.begin(), durations.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2.0;

  if (durations.size() >= 2) {
    double ss = 0.0;
    for (double d : durations) ss += (d - mean) * (d - mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

ContextDistribution context_distribution(std::span<const Judgment> judgments) {
  ContextDistribution d;
  d.total = judgments.size();
  if (judgments.empty()) return d;
  std::map<std::string, std::size_t> counts;
  std::size_t unspecified = 0;
  for (const auto& j : judgments) {
    if (j.context == ContextLabel::unspecified) {
      ++unspecified;
    } else {
      ++counts[std::string(to_string(j.context))];
    }
  }
  d.unspecified_pct = 100.0 * static_cast<double>(unspecified) / static_cast<double>(d.total);
  const double specified = static_cast<double>(d.total - unspecified);
  for (const auto& [label, c] : counts) d.labeled_pct[label] = 100.0 * static_cast<double>(c) / specified;
  return d;
}

double compliance_rate(std::span<const Judgment> judgments, const std::string& field, std::size_t min_items) {
  if (judgments.empty()) return 1.0;
  std::size_t pass = 0;
  for (const auto& j : judgments) {
    auto it = j.values.find(field);
    if (it == j.values.end() || it->second.kind() != ValueKind::List)
      throw Error(Errc::field_not_list, field + " in judgment " + j.id);
    if (it->second.list().size() >= min_items) ++pass;
  }
  return static_cast<double>(pass) / static_cast<double>(judgments.size());
}

json to_json(const KappaResult& k) {
  return json{{"kappa", k.kappa},       {"standard_error", k.standard_error},
              {"p_bar", k.p_bar},       {"p_e", k.p_e},
              {"ci95", {k.ci_low, k.ci_high}}, {"z", k.z},
              {"p_value", k.p_value}};
}

json to_json(const ExecutionStats& s) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"count", s.count}, {"mean", opt(s.mean)}, {"median", opt(s.median)}, {"stddev", opt(s.stddev)}};
}

json to_json(const ContextDistribution& d) {
  return json{{"total", d.total}, {"unspecified_pct", d.unspecified_pct}, {"labeled_pct", d.labeled_pct}};
}

}  // namespace crowdcafe
