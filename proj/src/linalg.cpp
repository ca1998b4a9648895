#include "qacal/linalg.hpp"

#include <cmath>

namespace qacal {

bool solve_linear(std::vector<double> a, std::vector<double>& b, std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::fabs(a[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      double v = std::fabs(a[r * n + col]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (!(best > 1e-300)) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[piv * n + c], a[col * n + c]);
      std::swap(b[piv], b[col]);
    }
    double inv = 1.0 / a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = a[r * n + col] * inv;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri * n + c] * b[c];
    b[ri] = s / a[ri * n + ri];
  }
  return true;
}

bool invert_matrix(std::vector<double>& a, std::size_t n, double* min_pivot_ratio) {
  std::vector<std::size_t> perm(n);
  double min_piv = 0.0, max_piv = 0.0;
  // Gauss-Jordan with column pivoting recorded for the final row swap.
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::fabs(a[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      double v = std::fabs(a[r * n + col]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    perm[col] = piv;
    if (!(best > 1e-300)) {
      if (min_pivot_ratio) *min_pivot_ratio = 0.0;
      return false;
    }
    if (col == 0) {
      min_piv = max_piv = best;
    } else {
      if (best < min_piv) min_piv = best;
      if (best > max_piv) max_piv = best;
    }
    if (piv != col)
      for (std::size_t c = 0; c < n; ++c) std::swap(a[piv * n + c], a[col * n + c]);
    double inv = 1.0 / a[col * n + col];
    a[col * n + col] = 1.0;
    for (std::size_t c = 0; c < n; ++c) a[col * n + c] *= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a[r * n + col];
      if (f == 0.0) continue;
      a[r * n + col] = 0.0;
      for (std::size_t c = 0; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
    }
  }
  for (std::size_t col = n; col-- > 0;) {
    if (perm[col] != col)
      for (std::size_t r = 0; r < n; ++r) std::swap(a[r * n + col], a[r * n + perm[col]]);
  }
  if (min_pivot_ratio) *min_pivot_ratio = max_piv > 0.0 ? min_piv / max_piv : 0.0;
  return true;
}

}  // namespace qacal
