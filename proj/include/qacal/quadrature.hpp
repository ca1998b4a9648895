#pragma once

#include <vector>

namespace qacal {

// Quadrature rule against the standard-normal prior: sum_q weights[q] *
// f(nodes[q]) approximates the integral of f against N(0, 1). Weights are
// normalized to sum to 1.
struct QuadratureGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

// Gauss-Hermite rule with the change of variable for N(0, 1) applied.
// n_nodes must be in [2, 200].
QuadratureGrid gauss_hermite_grid(int n_nodes);

}  // namespace qacal
