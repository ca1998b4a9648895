#include "qacal/model.hpp"

#include <cmath>

#include "qacal/errors.hpp"
#include "qacal/stats.hpp"

namespace qacal {

std::optional<double> slope_intercept_to_difficulty(double a, double d) {
  if (std::fabs(a) < kSlopeEps) return std::nullopt;
  return -d / a;
}

Dichotomous2PL Dichotomous2PL::from_ab(double a, double b) {
  Dichotomous2PL p;
  p.a = a;
  p.b = b;
  p.d = -a * b;
  return p;
}

Dichotomous2PL Dichotomous2PL::from_ad(double a, double d) {
  Dichotomous2PL p;
  p.a = a;
  p.d = d;
  p.b = slope_intercept_to_difficulty(a, d);
  return p;
}

std::vector<int> GradedParams::identity_map(int k) {
  std::vector<int> m(k);
  for (int c = 1; c <= k; ++c) m[c - 1] = c;
  return m;
}

void GradedParams::validate() const {
  for (std::size_t j = 1; j < thresholds.size(); ++j) {
    if (!(thresholds[j] > thresholds[j - 1]))
      throw InvalidInputError("graded thresholds must be strictly increasing");
  }
  std::vector<bool> hit(n_modeled(), false);
  for (int c : category_map) {
    if (c < 1 || c > n_modeled())
      throw InvalidInputError("category_map value out of modeled range");
    hit[c - 1] = true;
  }
  for (bool h : hit)
    if (!h) throw InvalidInputError("category_map must cover every modeled category");
}

double ItemParams::discrimination() const {
  return is_dichotomous() ? dich().a : graded().a;
}

double icc_2pl(double theta, const Dichotomous2PL& params) {
  return logistic(params.a * theta + params.d);
}

double grm_cumulative(double theta, const GradedParams& params, int j) {
  return logistic(params.a * (theta - params.thresholds[j]));
}

std::vector<double> grm_category_probs(double theta, const GradedParams& params) {
  params.validate();
  const int k = params.n_modeled();
  std::vector<double> probs(k);
  const double a = params.a;
  probs[0] = logistic(-(a * (theta - params.thresholds[0])));
  for (int c = 1; c < k - 1; ++c)
    probs[c] = logistic_diff(a * (theta - params.thresholds[c - 1]),
                             a * (theta - params.thresholds[c]));
  probs[k - 1] = logistic(a * (theta - params.thresholds[k - 2]));
  for (double& p : probs)
    if (p < 0.0) p = 0.0;  // reversed cumulatives under a < 0
  return probs;
}

double response_prob(int response, const ItemParams& params, double theta) {
  if (params.is_dichotomous()) {
    double z = params.dich().a * theta + params.dich().d;
    return response == 1 ? logistic(z) : logistic(-z);
  }
  const GradedParams& g = params.graded();
  int cat = g.remap(response);
  double p;
  if (cat == 1) {
    p = logistic(-(g.a * (theta - g.thresholds[0])));
  } else if (cat == g.n_modeled()) {
    p = logistic(g.a * (theta - g.thresholds[cat - 2]));
  } else {
    p = logistic_diff(g.a * (theta - g.thresholds[cat - 2]),
                      g.a * (theta - g.thresholds[cat - 1]));
  }
  return p > 0.0 ? p : 0.0;
}

ScreenResult screen_items(const ResponseMatrix& matrix, int min_responses) {
  if (matrix.n_items() == 0 || matrix.n_persons() == 0)
    throw InvalidInputError("screen_items: empty response matrix");
  ScreenResult out;
  for (std::size_t i = 0; i < matrix.n_items(); ++i) {
    int first = ResponseMatrix::kAbsent;
    int n = 0;
    bool varies = false;
    for (std::size_t p = 0; p < matrix.n_persons(); ++p) {
      int v = matrix.cell(p, i);
      if (v == ResponseMatrix::kAbsent) continue;
      if (n == 0)
        first = v;
      else if (v != first)
        varies = true;
      ++n;
    }
    if (n < min_responses) {
      out.dropped.push_back({matrix.item(i).id, "insufficient responses"});
    } else if (!varies) {
      out.dropped.push_back({matrix.item(i).id, "zero variance"});
    } else {
      out.kept.push_back(i);
    }
  }
  return out;
}

}  // namespace qacal
