#pragma once

#include <string>
#include <vector>

#include "qacal/item_params.hpp"
#include "qacal/response_matrix.hpp"

namespace qacal {

// P(correct | theta) under the 2PL, logit metric (D = 1).
double icc_2pl(double theta, const Dichotomous2PL& params);

// P(X >= j+1 | theta) for threshold index j (0-based into thresholds).
double grm_cumulative(double theta, const GradedParams& params, int j);

// Probability of each modeled category 1..K at theta; sums to 1.
std::vector<double> grm_category_probs(double theta, const GradedParams& params);

// Probability of an observed response cell under either model.
// Graded responses are remapped through category_map first.
double response_prob(int response, const ItemParams& params, double theta);

struct DroppedItem {
  std::string id;
  std::string reason;  // "zero variance" or "insufficient responses"
};

struct ScreenResult {
  std::vector<std::size_t> kept;  // item indices into the input matrix
  std::vector<DroppedItem> dropped;
};

// Drops items whose non-absent responses are all identical and items with
// fewer than min_responses non-absent cells. Throws InvalidInputError on an
// empty matrix.
ScreenResult screen_items(const ResponseMatrix& matrix, int min_responses = 2);

}  // namespace qacal
