#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qacal/item_params.hpp"
#include "qacal/response_matrix.hpp"

namespace qacal {

// Opinion / free-text feedback, person x question. Question keys are the
// shared suffix that pairs exam_<k> with assess_<k> and opinion_<k> columns.
// Empty string = no response.
struct OpinionTable {
  std::vector<std::string> person_ids;
  std::vector<std::string> questions;
  std::vector<std::string> opinion;      // flattened person-major
  std::vector<std::string> comment;
  std::vector<std::string> alternative;

  const std::string& opinion_at(std::size_t person, std::size_t question) const {
    return opinion[person * questions.size() + question];
  }
};

inline const char* const kOpinionChoices[4] = {"reasonable", "too_easy", "complicated",
                                               "ambiguous"};

// Per-question aggregate joining the exam item, the assess item and the
// opinion column that share a suffix. Missing pieces stay unset.
struct ItemAggregate {
  std::string question;  // shared suffix, e.g. "7"
  std::string exam_item_id;
  std::optional<double> mean_exam_score;
  std::optional<double> mean_assessment;
  std::optional<double> prop_reasonable, prop_too_easy, prop_complicated, prop_ambiguous;
  std::optional<double> difficulty;       // calibrated b (absent when unstable)
  std::optional<double> discrimination;   // calibrated a
  int n_exam = 0, n_assess = 0, n_opinion = 0;
};

struct ExcludedAggregate {
  std::string question;
  std::string reason;
};

struct AggregateResult {
  std::vector<ItemAggregate> rows;
  std::vector<ExcludedAggregate> excluded;
};

AggregateResult aggregate_items(const ResponseMatrix& matrix, const OpinionTable& opinions,
                                const std::vector<ItemParams>& params);

// Pairwise-complete Pearson correlations with two-sided t-test p-values.
// NaN marks missing input cells and unavailable output entries (< 3 pairs).
struct CorrelationMatrix {
  std::vector<std::string> labels;
  std::vector<double> r;  // n x n row-major, diagonal exactly 1
  std::vector<double> p;
  std::vector<int> n;     // complete pairs per cell
  std::size_t size() const { return labels.size(); }
  double r_at(std::size_t i, std::size_t j) const { return r[i * labels.size() + j]; }
  double p_at(std::size_t i, std::size_t j) const { return p[i * labels.size() + j]; }
};

CorrelationMatrix pearson_matrix(const std::vector<std::string>& names,
                                 const std::vector<std::vector<double>>& columns);

// Plain Pearson r over pairwise-complete entries; NaN when fewer than 3
// pairs or a zero-variance side.
double pearson_r(const std::vector<double>& x, const std::vector<double>& y, int* n_used = nullptr);

struct AgreementReport {
  std::string rater_a;
  std::string rater_b;
  double percent_exact_agreement = 0.0;
  int n_items = 0;
};

// Proportion of commonly rated items with identical star category.
// Ratings use -1 for "not rated". Throws InvalidInputError on no overlap.
AgreementReport exact_agreement(const std::string& rater_a, const std::vector<int>& ratings_a,
                                const std::string& rater_b, const std::vector<int>& ratings_b);

// Correlation of per-item rating dispersion (sample SD over raters) with each
// opinion-proportion column. NaN entries when dispersion is constant.
struct DisagreementProfile {
  std::vector<std::string> features;
  std::vector<double> r;
  std::vector<double> p;
  std::vector<int> n;
  std::vector<double> dispersion;  // per item, NaN when < 2 raters
};

DisagreementProfile disagreement_profile(const std::vector<std::vector<int>>& ratings_per_item,
                                         const std::vector<std::string>& feature_names,
                                         const std::vector<std::vector<double>>& feature_columns);

}  // namespace qacal
