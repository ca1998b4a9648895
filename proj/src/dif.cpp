#include "qacal/dif.hpp"

#include <algorithm>
#include <cmath>

#include "qacal/errors.hpp"
#include "qacal/linalg.hpp"
#include "qacal/parallel.hpp"
#include "qacal/stats.hpp"

namespace qacal {

std::vector<Group> median_split(const std::vector<AbilityEstimate>& abilities) {
  if (abilities.size() < 4)
    throw InvalidInputError("median_split: need at least 4 persons");
  std::vector<double> sorted;
  sorted.reserve(abilities.size());
  for (const auto& a : abilities) sorted.push_back(a.theta_eap);
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back())
    throw InvalidInputError("median_split: degenerate grouping, all abilities identical");
  const std::size_t n = sorted.size();
  double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  std::vector<Group> groups(n);
  std::size_t n_high = 0;
  for (std::size_t i = 0; i < n; ++i) {
    groups[i] = abilities[i].theta_eap > median ? Group::high : Group::low;
    if (groups[i] == Group::high) ++n_high;
  }
  if (n_high == 0 || n_high == n)
    throw InvalidInputError("median_split: degenerate grouping, one group is empty");
  return groups;
}

LogisticFit logistic_newton(const std::vector<double>& x_rows, const std::vector<int>& y,
                            std::size_t n_predictors, int max_iter, double tol) {
  const std::size_t n = y.size();
  const std::size_t p = n_predictors;
  LogisticFit fit;
  fit.beta.assign(p, 0.0);
  fit.se.assign(p, 0.0);

  std::vector<double> grad(p), hess(p * p), eta(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(hess.begin(), hess.end(), 0.0);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = &x_rows[i * p];
      double z = 0.0;
      for (std::size_t u = 0; u < p; ++u) z += xi[u] * fit.beta[u];
      eta[i] = z;
      double prob = logistic(z);
      ll += y[i] == 1 ? log_logistic(z) : log_logistic_c(z);
      double resid = y[i] - prob;
      double w = prob * (1.0 - prob);
      for (std::size_t u = 0; u < p; ++u) {
        grad[u] += resid * xi[u];
        for (std::size_t v = u; v < p; ++v) hess[u * p + v] += w * xi[u] * xi[v];
      }
    }
    for (std::size_t u = 0; u < p; ++u)
      for (std::size_t v = 0; v < u; ++v) hess[u * p + v] = hess[v * p + u];
    fit.log_lik = ll;
    fit.n_iter = iter;

    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::fabs(g));
    std::vector<double> step = grad;
    if (!solve_linear(hess, step, p)) break;  // separation has flattened the Hessian
    double smax = 0.0;
    for (double s : step) smax = std::max(smax, std::fabs(s));
    if (smax > 10.0) {
      // Damp runaway steps so divergence is gradual and detectable.
      for (double& s : step) s *= 10.0 / smax;
      smax = 10.0;
    }
    for (std::size_t u = 0; u < p; ++u) fit.beta[u] += step[u];
    if (smax < tol && gmax < 1e-6) {
      fit.converged = true;
      break;
    }
  }

  // Wald SEs from the observed information at the final beta.
  std::vector<double> info(p * p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = &x_rows[i * p];
    double z = 0.0;
    for (std::size_t u = 0; u < p; ++u) z += xi[u] * fit.beta[u];
    double prob = logistic(z);
    double w = prob * (1.0 - prob);
    for (std::size_t u = 0; u < p; ++u)
      for (std::size_t v = u; v < p; ++v) info[u * p + v] += w * xi[u] * xi[v];
  }
  for (std::size_t u = 0; u < p; ++u)
    for (std::size_t v = 0; v < u; ++v) info[u * p + v] = info[v * p + u];
  double ll_final = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = &x_rows[i * p];
    double z = 0.0;
    for (std::size_t u = 0; u < p; ++u) z += xi[u] * fit.beta[u];
    ll_final += y[i] == 1 ? log_logistic(z) : log_logistic_c(z);
  }
  fit.log_lik = ll_final;
  if (invert_matrix(info, p)) {
    for (std::size_t u = 0; u < p; ++u)
      fit.se[u] = info[u * p + u] > 0.0 ? std::sqrt(info[u * p + u])
                                        : std::numeric_limits<double>::infinity();
  } else {
    for (std::size_t u = 0; u < p; ++u) fit.se[u] = std::numeric_limits<double>::infinity();
  }
  return fit;
}

DifRow uniform_dif(const std::string& item_id, const std::vector<int>& responses,
                   const std::vector<double>& theta, const std::vector<Group>& groups,
                   const DifConfig& config) {
  if (responses.size() != theta.size() || responses.size() != groups.size())
    throw InvalidInputError("uniform_dif: input lengths differ");

  // Design: intercept, theta, group coded +-1/2 (high positive). The
  // symmetric coding makes group relabeling an exact sign flip of delta.
  std::vector<double> x;
  std::vector<int> y;
  int n_low = 0, n_high = 0;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    if (responses[i] == ResponseMatrix::kAbsent) continue;
    x.push_back(1.0);
    x.push_back(theta[i]);
    x.push_back(groups[i] == Group::high ? 0.5 : -0.5);
    y.push_back(responses[i]);
    if (groups[i] == Group::high)
      ++n_high;
    else
      ++n_low;
  }
  if (y.empty()) throw InvalidInputError("uniform_dif: no observed responses for " + item_id);
  bool any0 = false, any1 = false;
  for (int v : y) (v == 1 ? any1 : any0) = true;
  if (!any0 || !any1)
    throw InvalidInputError("uniform_dif: zero-variance item " + item_id);

  LogisticFit full = logistic_newton(x, y, 3);

  // Null model: group coefficient fixed at zero.
  std::vector<double> x0;
  x0.reserve(y.size() * 2);
  for (std::size_t i = 0; i < y.size(); ++i) {
    x0.push_back(x[i * 3 + 0]);
    x0.push_back(x[i * 3 + 1]);
  }
  LogisticFit null = logistic_newton(x0, y, 2);

  DifRow row;
  row.item = item_id;
  row.n_low = n_low;
  row.n_high = n_high;
  row.delta_log_odds = full.beta[2];
  row.separation_detected = !full.converged || std::fabs(full.beta[2]) > 15.0 ||
                            !std::isfinite(full.se[2]);
  double z = full.se[2] > 0.0 ? full.beta[2] / full.se[2] : 0.0;
  row.wald_p_value = std::isfinite(z) ? z_two_sided_p(z) : 1.0;
  row.flagged = std::fabs(row.delta_log_odds) > config.delta_flag_threshold &&
                row.wald_p_value < config.alpha;
  row.log_lik = full.log_lik;
  row.null_log_lik = null.log_lik;
  return row;
}

DifReport run_dif_screen(const ResponseMatrix& matrix, const std::vector<ItemParams>& params,
                         const QuadratureGrid& grid, const DifConfig& config,
                         const std::vector<Group>* external_groups) {
  ResponseMatrix sub = align_to_params(matrix, params);
  auto abilities = eap_scores(sub, params, grid);
  std::vector<double> theta(abilities.size());
  for (std::size_t i = 0; i < abilities.size(); ++i) theta[i] = abilities[i].theta_eap;

  std::vector<Group> groups;
  if (config.grouping == DifGrouping::external) {
    if (!external_groups || external_groups->size() != sub.n_persons())
      throw InvalidInputError("run_dif_screen: external grouping labels missing or misaligned");
    groups = *external_groups;
  } else {
    groups = median_split(abilities);
  }

  DifReport report;
  report.config = config;
  for (Group g : groups) (g == Group::high ? report.n_high : report.n_low)++;

  std::vector<std::size_t> dich_items;
  for (std::size_t j = 0; j < params.size(); ++j)
    if (params[j].is_dichotomous()) dich_items.push_back(j);

  std::vector<DifRow> rows(dich_items.size());
  std::vector<std::string> skip_reason(dich_items.size());
  parallel_for_blocks(dich_items.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      std::size_t j = dich_items[k];
      std::vector<int> resp(sub.n_persons());
      for (std::size_t p = 0; p < sub.n_persons(); ++p) resp[p] = sub.cell(p, j);
      try {
        rows[k] = uniform_dif(params[j].id, resp, theta, groups, config);
      } catch (const InvalidInputError& e) {
        skip_reason[k] = e.what();
      }
    }
  });
  for (std::size_t k = 0; k < dich_items.size(); ++k) {
    if (skip_reason[k].empty())
      report.rows.push_back(std::move(rows[k]));
    else
      report.skipped.push_back({params[dich_items[k]].id, skip_reason[k]});
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const DifRow& a, const DifRow& b) {
    return std::fabs(a.delta_log_odds) > std::fabs(b.delta_log_odds);
  });
  return report;
}

}  // namespace qacal
