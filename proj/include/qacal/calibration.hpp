#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qacal/item_params.hpp"
#include "qacal/model.hpp"
#include "qacal/quadrature.hpp"
#include "qacal/response_matrix.hpp"

namespace qacal {

struct CalibrationConfig {
  int n_quadrature = 10;
  int max_em_cycles = 500;
  double em_tolerance = 1e-4;       // max absolute parameter change
  int inner_newton_max_iter = 50;
  double inner_newton_tolerance = 1e-12;
  double slope_clamp = 6.0;         // cap on |a|
  std::uint64_t seed = 1;           // jitters degenerate start values
};

// Per-person posterior over quadrature nodes, person-major.
struct PosteriorTable {
  std::size_t n_persons = 0;
  std::size_t n_nodes = 0;
  std::vector<double> w;
  double at(std::size_t person, std::size_t node) const { return w[person * n_nodes + node]; }
};

// Expected sufficient statistics for one item, per node.
// Dichotomous: n_q (expected answered) and r_q (expected correct).
// Graded: n_q and r_qk flattened node-major over modeled categories.
struct ItemExpectedCounts {
  std::vector<double> n_q;
  std::vector<double> r_q;
  std::vector<double> r_qk;
  int n_categories = 0;  // modeled K, 0 for dichotomous
};

struct ItemStandardErrors {
  double se_a = 0.0;
  std::vector<double> se_loc;  // {se_b} for 2PL (empty when b unstable); per threshold for graded
  bool unreliable = false;
};

struct CalibrationResult {
  std::vector<ItemParams> items;  // kept items only, matrix order
  std::vector<ItemStandardErrors> ses;
  double log_likelihood = 0.0;
  int n_cycles = 0;
  bool converged = false;
  std::vector<DroppedItem> dropped;
  std::vector<double> cycle_log_likelihoods;
  CalibrationConfig config;
};

// Posterior over nodes for every person given current item parameters.
// Persons with no responses get the prior weights back.
PosteriorTable e_step(const ResponseMatrix& matrix, const std::vector<ItemParams>& params,
                      const QuadratureGrid& grid);

std::vector<ItemExpectedCounts> expected_counts(const ResponseMatrix& matrix,
                                                const std::vector<ItemParams>& params,
                                                const PosteriorTable& posterior);

// One M-step: per-item Newton maximization of the expected complete-data
// log-likelihood. Throws NumericalFailureError naming the item when Newton
// cannot make progress even with step halving.
std::vector<ItemParams> m_step(const std::vector<ItemExpectedCounts>& counts,
                               const std::vector<ItemParams>& current,
                               const QuadratureGrid& grid, const CalibrationConfig& config);

double marginal_log_likelihood(const ResponseMatrix& matrix,
                               const std::vector<ItemParams>& params,
                               const QuadratureGrid& grid);

struct SeResult {
  std::vector<ItemStandardErrors> items;
  bool information_singular = false;
};

// Cross-product (outer product of per-person scores) approximation.
SeResult standard_errors(const ResponseMatrix& matrix, const std::vector<ItemParams>& params,
                         const QuadratureGrid& grid, double slope_clamp = 6.0);

// Screens, collapses graded categories, and runs the EM to convergence.
CalibrationResult fit_mixed(const ResponseMatrix& matrix, const CalibrationConfig& config);

// Start values: a = 1; 2PL intercept from the observed logit-proportion;
// graded thresholds from cumulative category proportions. Applies category
// collapsing for graded items. Exposed for tests.
std::vector<ItemParams> start_values(const ResponseMatrix& matrix, std::uint64_t seed);

// The M-step objective/gradient/Hessian in the optimization parametrization,
// exposed so gradients can be checked against finite differences.
// Dichotomous items optimize psi = (a, d). Graded items optimize
// psi = (a, b1, gamma_2..gamma_{K-1}) with thresholds b_j = b_1 + sum exp(gamma).
namespace mstep {

double dich_objective(const ItemExpectedCounts& counts, const QuadratureGrid& grid,
                      const double psi[2]);
void dich_gradient(const ItemExpectedCounts& counts, const QuadratureGrid& grid,
                   const double psi[2], double grad[2]);
void dich_hessian(const ItemExpectedCounts& counts, const QuadratureGrid& grid,
                  const double psi[2], double hess[4]);

std::vector<double> pack_graded(const GradedParams& params);
std::vector<double> unpack_thresholds(const std::vector<double>& psi);

double graded_objective(const ItemExpectedCounts& counts, const QuadratureGrid& grid,
                        const std::vector<double>& psi);
std::vector<double> graded_gradient(const ItemExpectedCounts& counts, const QuadratureGrid& grid,
                                    const std::vector<double>& psi);
std::vector<double> graded_hessian(const ItemExpectedCounts& counts, const QuadratureGrid& grid,
                                   const std::vector<double>& psi);

}  // namespace mstep

}  // namespace qacal
