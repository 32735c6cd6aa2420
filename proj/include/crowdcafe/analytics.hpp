#pragma once

// Agreement and timing statistics over collected judgments.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdcafe/model.hpp"

namespace crowdcafe {

// Subjects x categories tally with a constant number of raters per subject.
class RatingMatrix {
 public:
  /// Throws RaggedMatrix when rows differ in width or sum, TooFewRaters when
  /// the common row sum is below 2, invalid_argument for fewer than two
  /// categories or no subjects.
  explicit RatingMatrix(std::vector<std::vector<int>> counts);

  std::size_t n_subjects() const { return counts_.size(); }
  std::size_t n_categories() const { return counts_.front().size(); }
  int n_raters() const { return n_raters_; }
  int count(std::size_t subject, std::size_t category) const { return counts_[subject][category]; }
  const std::vector<std::vector<int>>& rows() const { return counts_; }

 private:
  std::vector<std::vector<int>> counts_;
  int n_raters_ = 0;
};

struct KappaResult {
  double kappa = 0.0;
  double standard_error = 0.0;  // large-sample SE under the no-agreement null
  double p_bar = 0.0;           // mean observed agreement
  double p_e = 0.0;             // expected chance agreement
  double ci_low = 0.0;
  double ci_high = 0.0;
  double z = 0.0;
  double p_value = 1.0;  // two-sided, normal approximation
};

KappaResult fleiss_kappa(const RatingMatrix& m);

struct LabeledMatrix {
  RatingMatrix matrix;
  std::vector<std::string> categories;  // column labels
  std::vector<std::string> subjects;    // unit ids, row order
};

/// Tallies `field` over units that have at least `n_raters` judgments,
/// keeping the n_raters earliest (by submitted_at, then id) per unit. Units
/// with fewer judgments are skipped; list values are labelled as sorted sets.
/// When fewer than two distinct labels occur, a placeholder column is added
/// so the matrix stays well-formed.
LabeledMatrix rating_matrix_from_judgments(std::span<const Judgment> judgments, const std::string& field,
                                           int n_raters);

struct ExecutionStats {
  std::size_t count = 0;
  std::optional<double> mean;
  std::optional<double> median;
  std::optional<double> stddev;  // sample (n-1); needs two samples
};

ExecutionStats execution_stats(std::span<const double> durations);

struct ContextDistribution {
  std::size_t total = 0;
  double unspecified_pct = 0.0;                 // share of all judgments
  std::map<std::string, double> labeled_pct;    // share of specified judgments
};

ContextDistribution context_distribution(std::span<const Judgment> judgments);

/// Fraction of judgments whose list-valued `field` has at least
/// `min_items` entries. Empty input counts as fully compliant.
double compliance_rate(std::span<const Judgment> judgments, const std::string& field, std::size_t min_items = 3);

json to_json(const KappaResult& k);
json to_json(const ExecutionStats& s);
json to_json(const ContextDistribution& d);

}  // namespace crowdcafe
