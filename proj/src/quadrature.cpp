#include "qacal/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "qacal/errors.hpp"

namespace qacal {

namespace {

// Eigenvalues of a symmetric tridiagonal matrix by the implicit QL method.
// d holds the diagonal (replaced by eigenvalues), e the subdiagonal in
// e[0..n-2].
void tridiagonal_eigenvalues(std::vector<double>& d, std::vector<double>& e) {
  const int n = static_cast<int>(d.size());
  e.push_back(0.0);
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) <= 2.3e-16 * dd) break;
      }
      if (m != l) {
        if (iter++ == 60)
          throw NumericalFailureError("gauss_hermite_grid: eigenvalue iteration stalled");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        for (int i = m - 1; i >= l; --i) {
          double f = s * e[i];
          double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0 && i >= l) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

// Orthonormal Hermite recurrence at x: returns h_n(x) and h_{n-1}(x).
void hermite_pair(int n, double x, double* hn, double* hn1) {
  const double pim4 = 0.7511255444649425;  // pi^(-1/4)
  double p1 = pim4;
  double p2 = 0.0;
  for (int j = 1; j <= n; ++j) {
    double p3 = p2;
    p2 = p1;
    p1 = x * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
  }
  *hn = p1;
  *hn1 = p2;
}

}  // namespace

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix (zero diagonal,
// off-diagonal sqrt(j/2)), polished by Newton on the orthonormal recurrence;
// weights from the derivative identity w = 2 / (h_n'(x))^2 with
// h_n'(x) = sqrt(2n) h_{n-1}(x). Change of variable maps onto N(0, 1).
QuadratureGrid gauss_hermite_grid(int n_nodes) {
  if (n_nodes < 2 || n_nodes > 200)
    throw InvalidInputError("gauss_hermite_grid: n_nodes must be in [2, 200]");

  const int n = n_nodes;
  std::vector<double> d(n, 0.0);
  std::vector<double> e(n - 1);
  for (int j = 1; j < n; ++j) e[j - 1] = std::sqrt(j / 2.0);
  tridiagonal_eigenvalues(d, e);
  std::sort(d.begin(), d.end());

  // Enforce the exact symmetry of the rule.
  for (int i = 0; i < n / 2; ++i) {
    double v = 0.5 * (d[n - 1 - i] - d[i]);
    d[i] = -v;
    d[n - 1 - i] = v;
  }
  if (n % 2 == 1) d[n / 2] = 0.0;

  std::vector<double> w(n);
  for (int i = 0; i < n / 2 + 1; ++i) {
    double x = d[i];
    double hn, hn1;
    for (int it = 0; it < 3; ++it) {  // Newton polish from the eigenvalue
      hermite_pair(n, x, &hn, &hn1);
      double deriv = std::sqrt(2.0 * n) * hn1;
      if (deriv == 0.0 || !std::isfinite(deriv)) break;
      double step = hn / deriv;
      if (!std::isfinite(step) || std::fabs(step) > 0.1) break;
      x -= step;
    }
    hermite_pair(n, x, &hn, &hn1);
    double deriv = std::sqrt(2.0 * n) * hn1;
    double weight = std::isfinite(deriv) ? 2.0 / (deriv * deriv) : 0.0;
    d[i] = x;
    d[n - 1 - i] = -x;
    w[i] = weight;
    w[n - 1 - i] = weight;
  }

  QuadratureGrid grid;
  grid.nodes.resize(n);
  grid.weights.resize(n);
  const double sqrt2 = std::sqrt(2.0);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += w[i];
  for (int i = 0; i < n; ++i) {
    grid.nodes[i] = sqrt2 * d[i];
    grid.weights[i] = w[i] / total;
  }
  return grid;
}

}  // namespace qacal
