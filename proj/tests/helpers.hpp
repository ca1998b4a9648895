#pragma once

#include <string>
#include <vector>

#include "qacal/item_params.hpp"
#include "qacal/response_matrix.hpp"
#include "qacal/simulator.hpp"

namespace qacal::test {

inline ItemParams dich(const std::string& id, double a, double b) {
  return {id, Dichotomous2PL::from_ab(a, b)};
}

inline ItemParams graded(const std::string& id, double a, std::vector<double> thresholds,
                         int declared = -1) {
  GradedParams g;
  g.a = a;
  g.thresholds = std::move(thresholds);
  g.category_map =
      GradedParams::identity_map(declared > 0 ? declared : static_cast<int>(g.thresholds.size()) + 1);
  return {id, std::move(g)};
}

// A bank of 2PL items with discriminations and difficulties spread over the
// given ranges.
inline std::vector<ItemParams> spread_2pl_bank(int n, double a_lo, double a_hi, double b_lo,
                                               double b_hi) {
  std::vector<ItemParams> items;
  for (int j = 0; j < n; ++j) {
    double fa = n == 1 ? 0.5 : static_cast<double>(j) / (n - 1);
    double fb = n == 1 ? 0.5 : static_cast<double>((j * 7) % n) / (n - 1);
    items.push_back(dich("exam_" + std::to_string(j + 1), a_lo + fa * (a_hi - a_lo),
                         b_lo + fb * (b_hi - b_lo)));
  }
  return items;
}

inline SimSpec basic_spec(std::vector<ItemParams> items, int n_persons, std::uint64_t seed) {
  SimSpec spec;
  spec.items = std::move(items);
  spec.n_persons = n_persons;
  spec.seed = seed;
  spec.seed_set = true;
  return spec;
}

}  // namespace qacal::test
