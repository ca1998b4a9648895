#pragma once

#include <string>
#include <vector>

#include "qacal/calibration.hpp"
#include "qacal/scoring.hpp"

namespace qacal {

enum class Group : int { low = 0, high = 1 };

enum class DifGrouping { median_split, external };

struct DifConfig {
  double delta_flag_threshold = 0.6;  // |delta| log-odds
  double alpha = 0.05;
  DifGrouping grouping = DifGrouping::median_split;
};

struct DifRow {
  std::string item;
  double delta_log_odds = 0.0;
  double wald_p_value = 1.0;
  bool flagged = false;
  bool separation_detected = false;
  int n_low = 0;
  int n_high = 0;
  double log_lik = 0.0;       // full model
  double null_log_lik = 0.0;  // group coefficient fixed at 0
};

struct DifSkip {
  std::string item;
  std::string reason;
};

struct DifReport {
  DifConfig config;
  int n_low = 0;
  int n_high = 0;
  std::vector<DifRow> rows;  // sorted by |delta| descending
  std::vector<DifSkip> skipped;
};

// theta > median -> high, theta <= median -> low (ties go low). Throws
// InvalidInputError with fewer than 4 persons and when all theta coincide
// (degenerate grouping).
std::vector<Group> median_split(const std::vector<AbilityEstimate>& abilities);

// Uniform DIF for one dichotomous item: logistic regression of the 0/1
// response on theta and a group indicator. responses uses -1 for absent.
DifRow uniform_dif(const std::string& item_id, const std::vector<int>& responses,
                   const std::vector<double>& theta, const std::vector<Group>& groups,
                   const DifConfig& config);

// EAP scores, grouping, then uniform_dif per dichotomous item. external_groups
// is consulted only when config.grouping == external and must align with the
// matrix persons.
DifReport run_dif_screen(const ResponseMatrix& matrix, const std::vector<ItemParams>& params,
                         const QuadratureGrid& grid, const DifConfig& config,
                         const std::vector<Group>* external_groups = nullptr);

// Newton-Raphson ML for a small logistic regression; exposed for the DIF
// nesting diagnostics and reused by the analytics tests.
struct LogisticFit {
  std::vector<double> beta;
  std::vector<double> se;
  double log_lik = 0.0;
  bool converged = false;
  int n_iter = 0;
};

LogisticFit logistic_newton(const std::vector<double>& x_rows, const std::vector<int>& y,
                            std::size_t n_predictors, int max_iter = 100, double tol = 1e-10);

}  // namespace qacal
