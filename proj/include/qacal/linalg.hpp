#pragma once

#include <cstddef>
#include <vector>

namespace qacal {

// Small dense solvers for Newton steps and information matrices.
// Matrices are row-major n x n.

// Solves A x = b in place (b becomes x). Gaussian elimination with partial
// pivoting. Returns false when a pivot is (near-)zero.
bool solve_linear(std::vector<double> a, std::vector<double>& b, std::size_t n);

// Inverts a symmetric matrix in place via Gauss-Jordan with partial pivoting.
// Returns false on (near-)singularity. When min_pivot_ratio is given, it
// receives min|pivot| / max|pivot| as a conditioning hint.
bool invert_matrix(std::vector<double>& a, std::size_t n, double* min_pivot_ratio = nullptr);

}  // namespace qacal
