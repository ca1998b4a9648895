#pragma once

#include <string>
#include <vector>

#include "qacal/calibration.hpp"
#include "qacal/item_params.hpp"
#include "qacal/quadrature.hpp"
#include "qacal/response_matrix.hpp"

namespace qacal {

struct AbilityEstimate {
  std::string person_id;
  double theta_eap = 0.0;
  double posterior_sd = 1.0;
  int n_items_answered = 0;
  bool prior_only = false;  // no responses; estimate is the prior (0, 1)
};

// EAP scores from the e_step posteriors. The matrix may contain extra items;
// columns are matched to params by id and must all be present.
std::vector<AbilityEstimate> eap_scores(const ResponseMatrix& matrix,
                                        const std::vector<ItemParams>& params,
                                        const QuadratureGrid& grid);

// Fisher information of a single item at theta.
double item_information(const ItemParams& params, double theta);

struct InformationCurve {
  std::vector<double> theta;
  std::vector<double> total;
  std::vector<std::string> item_ids;
  std::vector<double> per_item;  // item-major: per_item[j * theta.size() + t]
  double at(std::size_t item, std::size_t t) const { return per_item[item * theta.size() + t]; }
};

InformationCurve test_information(const std::vector<ItemParams>& params,
                                  const std::vector<double>& theta_grid);

// 101 equally spaced points on [-4, 4].
std::vector<double> default_theta_grid();

// Selects and orders the matrix columns named by params. Throws when a
// parameter id has no matrix column.
ResponseMatrix align_to_params(const ResponseMatrix& matrix,
                               const std::vector<ItemParams>& params);

}  // namespace qacal
