#include "qacal/scoring.hpp"

#include <cmath>

#include "qacal/errors.hpp"
#include "qacal/stats.hpp"

namespace qacal {

ResponseMatrix align_to_params(const ResponseMatrix& matrix,
                               const std::vector<ItemParams>& params) {
  std::vector<std::size_t> idx;
  idx.reserve(params.size());
  for (const auto& p : params) {
    std::size_t i = matrix.find_item(p.id);
    if (i == ResponseMatrix::npos)
      throw InvalidInputError("matrix has no column for calibrated item " + p.id);
    idx.push_back(i);
  }
  return matrix.select_items(idx);
}

std::vector<AbilityEstimate> eap_scores(const ResponseMatrix& matrix,
                                        const std::vector<ItemParams>& params,
                                        const QuadratureGrid& grid) {
  ResponseMatrix sub = align_to_params(matrix, params);
  PosteriorTable post = e_step(sub, params, grid);

  std::vector<AbilityEstimate> out(sub.n_persons());
  for (std::size_t p = 0; p < sub.n_persons(); ++p) {
    AbilityEstimate est;
    est.person_id = sub.person_ids()[p];
    int n = 0;
    for (std::size_t j = 0; j < sub.n_items(); ++j)
      if (sub.has_response(p, j)) ++n;
    est.n_items_answered = n;
    if (n == 0) {
      est.theta_eap = 0.0;
      est.posterior_sd = 1.0;
      est.prior_only = true;
    } else {
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t q = 0; q < grid.size(); ++q) {
        double w = post.at(p, q);
        m1 += w * grid.nodes[q];
        m2 += w * grid.nodes[q] * grid.nodes[q];
      }
      est.theta_eap = m1;
      est.posterior_sd = std::sqrt(std::max(m2 - m1 * m1, 1e-12));
    }
    out[p] = std::move(est);
  }
  return out;
}

double item_information(const ItemParams& params, double theta) {
  if (params.is_dichotomous()) {
    double p = icc_2pl(theta, params.dich());
    double a = params.dich().a;
    return a * a * p * (1.0 - p);
  }
  // GRM: sum over categories of (dP_k/dtheta)^2 / P_k.
  const GradedParams& g = params.graded();
  const int k = g.n_modeled();
  double info = 0.0;
  double upper_deriv = 0.0;
  for (int c = 0; c < k; ++c) {
    double z_lo = c < k - 1 ? g.a * (theta - g.thresholds[c]) : 0.0;
    double lower_deriv = c < k - 1 ? g.a * logistic(z_lo) * logistic(-z_lo) : 0.0;
    double pc;
    if (c == 0)
      pc = logistic(-z_lo);
    else if (c == k - 1)
      pc = logistic(g.a * (theta - g.thresholds[c - 1]));
    else
      pc = logistic_diff(g.a * (theta - g.thresholds[c - 1]), z_lo);
    double dpc = upper_deriv - lower_deriv;
    if (pc > 1e-12) info += dpc * dpc / pc;
    upper_deriv = lower_deriv;
  }
  return info;
}

InformationCurve test_information(const std::vector<ItemParams>& params,
                                  const std::vector<double>& theta_grid) {
  InformationCurve curve;
  curve.theta = theta_grid;
  curve.total.assign(theta_grid.size(), 0.0);
  curve.item_ids.reserve(params.size());
  curve.per_item.assign(params.size() * theta_grid.size(), 0.0);
  for (std::size_t j = 0; j < params.size(); ++j) {
    curve.item_ids.push_back(params[j].id);
    for (std::size_t t = 0; t < theta_grid.size(); ++t) {
      double v = item_information(params[j], theta_grid[t]);
      curve.per_item[j * theta_grid.size() + t] = v;
      curve.total[t] += v;
    }
  }
  return curve;
}

std::vector<double> default_theta_grid() {
  std::vector<double> grid(101);
  for (int t = 0; t < 101; ++t) grid[t] = -4.0 + 8.0 * t / 100.0;
  return grid;
}

}  // namespace qacal
