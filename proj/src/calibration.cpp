#include "qacal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qacal/errors.hpp"
#include "qacal/linalg.hpp"
#include "qacal/parallel.hpp"
#include "qacal/rng.hpp"
#include "qacal/stats.hpp"

namespace qacal {

namespace {

constexpr double kProbFloor = 1e-300;

// Kahan update; keeps person- and item-order reductions insensitive to
// permutation at the 1e-12 level.
inline void kahan_add(double& sum, double& comp, double value) {
  double y = value - comp;
  double t = sum + y;
  comp = (t - sum) - y;
  sum = t;
}

void check_alignment(const ResponseMatrix& matrix, const std::vector<ItemParams>& params) {
  if (matrix.n_items() != params.size())
    throw InvalidInputError("item parameters do not match matrix items");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].id != matrix.item(i).id)
      throw InvalidInputError("item parameter order mismatch at " + params[i].id);
}

// Per-item table of log response probabilities, node-major: logp[q * K + cat].
// Dichotomous items use K = 2 with cat = response; graded items index the
// modeled category (0-based).
std::vector<std::vector<double>> log_prob_tables(const std::vector<ItemParams>& params,
                                                 const QuadratureGrid& grid) {
  std::vector<std::vector<double>> tables(params.size());
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (params[j].is_dichotomous()) {
      const auto& d = params[j].dich();
      tables[j].resize(grid.size() * 2);
      for (std::size_t q = 0; q < grid.size(); ++q) {
        double z = d.a * grid.nodes[q] + d.d;
        tables[j][q * 2 + 0] = log_logistic_c(z);
        tables[j][q * 2 + 1] = log_logistic(z);
      }
    } else {
      const auto& g = params[j].graded();
      const int k = g.n_modeled();
      tables[j].resize(grid.size() * k);
      for (std::size_t q = 0; q < grid.size(); ++q) {
        auto probs = grm_category_probs(grid.nodes[q], g);
        for (int c = 0; c < k; ++c)
          tables[j][q * k + c] = std::log(std::max(probs[c], kProbFloor));
      }
    }
  }
  return tables;
}

int modeled_category(const ItemParams& p, int response) {
  return p.is_dichotomous() ? response : p.graded().remap(response) - 1;
}

}  // namespace

PosteriorTable e_step(const ResponseMatrix& matrix, const std::vector<ItemParams>& params,
                      const QuadratureGrid& grid) {
  check_alignment(matrix, params);
  const std::size_t np = matrix.n_persons();
  const std::size_t nq = grid.size();
  auto tables = log_prob_tables(params, grid);

  PosteriorTable post;
  post.n_persons = np;
  post.n_nodes = nq;
  post.w.assign(np * nq, 0.0);

  parallel_for_blocks(np, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> logl(nq), comp(nq);
    for (std::size_t p = lo; p < hi; ++p) {
      std::fill(logl.begin(), logl.end(), 0.0);
      std::fill(comp.begin(), comp.end(), 0.0);
      for (std::size_t j = 0; j < matrix.n_items(); ++j) {
        int x = matrix.cell(p, j);
        if (x == ResponseMatrix::kAbsent) continue;
        int cat = modeled_category(params[j], x);
        int k = params[j].is_dichotomous() ? 2 : params[j].graded().n_modeled();
        const auto& tab = tables[j];
        for (std::size_t q = 0; q < nq; ++q) kahan_add(logl[q], comp[q], tab[q * k + cat]);
      }
      double m = logl[0];
      for (std::size_t q = 1; q < nq; ++q) m = std::max(m, logl[q]);
      double total = 0.0;
      double* w = &post.w[p * nq];
      for (std::size_t q = 0; q < nq; ++q) {
        w[q] = grid.weights[q] * std::exp(logl[q] - m);
        total += w[q];
      }
      for (std::size_t q = 0; q < nq; ++q) w[q] /= total;
    }
  });
  return post;
}

std::vector<ItemExpectedCounts> expected_counts(const ResponseMatrix& matrix,
                                                const std::vector<ItemParams>& params,
                                                const PosteriorTable& posterior) {
  check_alignment(matrix, params);
  const std::size_t np = matrix.n_persons();
  const std::size_t nq = posterior.n_nodes;
  std::vector<ItemExpectedCounts> counts(params.size());

  parallel_for_blocks(params.size(), [&](std::size_t lo, std::size_t hi) {
    std::vector<double> comp_n, comp_r;
    for (std::size_t j = lo; j < hi; ++j) {
      auto& c = counts[j];
      c.n_q.assign(nq, 0.0);
      comp_n.assign(nq, 0.0);
      if (params[j].is_dichotomous()) {
        c.r_q.assign(nq, 0.0);
        comp_r.assign(nq, 0.0);
        for (std::size_t p = 0; p < np; ++p) {
          int x = matrix.cell(p, j);
          if (x == ResponseMatrix::kAbsent) continue;
          const double* w = &posterior.w[p * nq];
          for (std::size_t q = 0; q < nq; ++q) {
            kahan_add(c.n_q[q], comp_n[q], w[q]);
            if (x == 1) kahan_add(c.r_q[q], comp_r[q], w[q]);
          }
        }
      } else {
        const int k = params[j].graded().n_modeled();
        c.n_categories = k;
        c.r_qk.assign(nq * k, 0.0);
        comp_r.assign(nq * k, 0.0);
        for (std::size_t p = 0; p < np; ++p) {
          int x = matrix.cell(p, j);
          if (x == ResponseMatrix::kAbsent) continue;
          int cat = params[j].graded().remap(x) - 1;
          const double* w = &posterior.w[p * nq];
          for (std::size_t q = 0; q < nq; ++q) {
            kahan_add(c.n_q[q], comp_n[q], w[q]);
            kahan_add(c.r_qk[q * k + cat], comp_r[q * k + cat], w[q]);
          }
        }
      }
    }
  });
  return counts;
}

double marginal_log_likelihood(const ResponseMatrix& matrix,
                               const std::vector<ItemParams>& params,
                               const QuadratureGrid& grid) {
  check_alignment(matrix, params);
  const std::size_t np = matrix.n_persons();
  const std::size_t nq = grid.size();
  if (np == 0 || matrix.n_items() == 0) return 0.0;
  auto tables = log_prob_tables(params, grid);

  std::vector<double> per_person(np, 0.0);
  parallel_for_blocks(np, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> logl(nq), comp(nq);
    for (std::size_t p = lo; p < hi; ++p) {
      std::fill(logl.begin(), logl.end(), 0.0);
      std::fill(comp.begin(), comp.end(), 0.0);
      for (std::size_t j = 0; j < matrix.n_items(); ++j) {
        int x = matrix.cell(p, j);
        if (x == ResponseMatrix::kAbsent) continue;
        int cat = modeled_category(params[j], x);
        int k = params[j].is_dichotomous() ? 2 : params[j].graded().n_modeled();
        for (std::size_t q = 0; q < nq; ++q) kahan_add(logl[q], comp[q], tables[j][q * k + cat]);
      }
      double m = logl[0];
      for (std::size_t q = 1; q < nq; ++q) m = std::max(m, logl[q]);
      double s = 0.0;
      for (std::size_t q = 0; q < nq; ++q) s += grid.weights[q] * std::exp(logl[q] - m);
      per_person[p] = m + std::log(s);
    }
  });
  double total = 0.0, comp = 0.0;
  for (double v : per_person) kahan_add(total, comp, v);
  return total;
}

// ---------------------------------------------------------------------------
// M-step objective machinery
// ---------------------------------------------------------------------------

namespace mstep {

double dich_objective(const ItemExpectedCounts& counts, const QuadratureGrid& grid,
                      const double psi[2]) {
  double ll = 0.0;
  for (std::size_t q = 0; q < grid.size(); ++q) {
    double z = psi[0] * grid.nodes[q] + psi[1];
    ll += counts.r_q[q] * z - counts.n_q[q] * softplus(z);
  }
  return ll;
}

void dich_gradient(const ItemExpectedCounts& counts, const QuadratureGrid& grid,
                   const double psi[2], double grad[2]) {
  grad[0] = grad[1] = 0.0;
  for (std::size_t q = 0; q < grid.size(); ++q) {
    double z = psi[0] * grid.nodes[q] + psi[1];
    double resid = counts.r_q[q] - counts.n_q[q] * logistic(z);
    grad[0] += resid * grid.nodes[q];
    grad[1] += resid;
  }
}

void dich_hessian(const ItemExpectedCounts& counts, const QuadratureGrid& grid,
                  const double psi[2], double hess[4]) {
  hess[0] = hess[1] = hess[2] = hess[3] = 0.0;
  for (std::size_t q = 0; q < grid.size(); ++q) {
    double z = psi[0] * grid.nodes[q] + psi[1];
    double p = logistic(z);
    double w = counts.n_q[q] * p * (1.0 - p);
    hess[0] -= w * grid.nodes[q] * grid.nodes[q];
    hess[1] -= w * grid.nodes[q];
    hess[3] -= w;
  }
  hess[2] = hess[1];
}

std::vector<double> pack_graded(const GradedParams& params) {
  // psi = (a, b1, log gaps)
  std::vector<double> psi(1 + params.thresholds.size());
  psi[0] = params.a;
  psi[1] = params.thresholds[0];
  for (std::size_t t = 1; t < params.thresholds.size(); ++t)
    psi[1 + t] = std::log(params.thresholds[t] - params.thresholds[t - 1]);
  return psi;
}

std::vector<double> unpack_thresholds(const std::vector<double>& psi) {
  std::vector<double> th(psi.size() - 1);
  th[0] = psi[1];
  for (std::size_t t = 1; t < th.size(); ++t) th[t] = th[t - 1] + std::exp(psi[1 + t]);
  return th;
}

namespace {

// Scratch for one node of the graded objective: cumulative curves and their
// first/second derivatives with respect to psi.
struct GradedNodeDerivs {
  int n_thresholds;
  int dim;
  std::vector<double> z;     // logit at the m-th threshold
  std::vector<double> cum;   // sigma(z_m)
  std::vector<double> dz;    // (m, u)
  std::vector<double> d2z;   // (m, u, v)
  std::vector<double> s1, s2;

  // Category probability from the stored logits, cancellation-free.
  double category_prob(int c, int k) const {
    if (c == 0) return logistic(-z[0]);
    if (c == k - 1) return logistic(z[k - 2]);
    return logistic_diff(z[c - 1], z[c]);
  }

  void compute(const std::vector<double>& psi, const std::vector<double>& thresholds,
               double theta) {
    const int m_count = n_thresholds;
    const int p = dim;
    const double a = psi[0];
    std::fill(d2z.begin(), d2z.end(), 0.0);
    for (int m = 0; m < m_count; ++m) {
      z[m] = a * (theta - thresholds[m]);
      double s = logistic(z[m]);
      cum[m] = s;
      s1[m] = logistic(z[m]) * logistic(-z[m]);
      s2[m] = s1[m] * (1.0 - 2.0 * s);
      double* dzm = &dz[m * p];
      dzm[0] = theta - thresholds[m];
      dzm[1] = -a;
      for (int t = 1; t <= m; ++t) dzm[1 + t] = -a * std::exp(psi[1 + t]);
      for (int t = m + 1; t < m_count; ++t) dzm[1 + t] = 0.0;
      double* d2zm = &d2z[m * p * p];
      d2zm[0 * p + 1] = -1.0;
      d2zm[1 * p + 0] = -1.0;
      for (int t = 1; t <= m; ++t) {
        double g = std::exp(psi[1 + t]);
        d2zm[0 * p + (1 + t)] = -g;
        d2zm[(1 + t) * p + 0] = -g;
        d2zm[(1 + t) * p + (1 + t)] = -a * g;
      }
    }
  }
};

}  // namespace

double graded_objective(const ItemExpectedCounts& counts, const QuadratureGrid& grid,
                        const std::vector<double>& psi) {
  const int k = counts.n_categories;
  auto th = unpack_thresholds(psi);
  const double a = psi[0];
  double ll = 0.0;
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const double theta = grid.nodes[q];
    for (int c = 0; c < k; ++c) {
      double r = counts.r_qk[q * k + c];
      if (r == 0.0) continue;
      double pc;
      if (c == 0)
        pc = logistic(-(a * (theta - th[0])));
      else if (c == k - 1)
        pc = logistic(a * (theta - th[k - 2]));
      else
        pc = logistic_diff(a * (theta - th[c - 1]), a * (theta - th[c]));
      ll += r * std::log(std::max(pc, kProbFloor));
    }
  }
  return ll;
}

// Gradient and Hessian share the same sweep; hess may be null.
static void graded_derivs(const ItemExpectedCounts& counts, const QuadratureGrid& grid,
                          const std::vector<double>& psi, std::vector<double>* grad,
                          std::vector<double>* hess) {
  const int k = counts.n_categories;
  const int p = static_cast<int>(psi.size());
  auto th = unpack_thresholds(psi);
  GradedNodeDerivs nd;
  nd.n_thresholds = k - 1;
  nd.dim = p;
  nd.z.resize(k - 1);
  nd.cum.resize(k - 1);
  nd.s1.resize(k - 1);
  nd.s2.resize(k - 1);
  nd.dz.resize((k - 1) * p);
  nd.d2z.resize((k - 1) * p * p);

  if (grad) grad->assign(p, 0.0);
  if (hess) hess->assign(p * p, 0.0);
  std::vector<double> dpk(p), d2pk(p * p);

  for (std::size_t q = 0; q < grid.size(); ++q) {
    nd.compute(psi, th, grid.nodes[q]);
    for (int c = 0; c < k; ++c) {
      double r = counts.r_qk[q * k + c];
      if (r == 0.0) continue;
      double pc = std::max(nd.category_prob(c, k), kProbFloor);

      for (int u = 0; u < p; ++u) {
        double du = 0.0;
        if (c > 0) du += nd.s1[c - 1] * nd.dz[(c - 1) * p + u];
        if (c < k - 1) du -= nd.s1[c] * nd.dz[c * p + u];
        dpk[u] = du;
      }
      if (grad)
        for (int u = 0; u < p; ++u) (*grad)[u] += r * dpk[u] / pc;
      if (hess) {
        for (int u = 0; u < p; ++u) {
          for (int v = u; v < p; ++v) {
            double d2 = 0.0;
            if (c > 0) {
              const int m = c - 1;
              d2 += nd.s2[m] * nd.dz[m * p + u] * nd.dz[m * p + v] +
                    nd.s1[m] * nd.d2z[m * p * p + u * p + v];
            }
            if (c < k - 1) {
              const int m = c;
              d2 -= nd.s2[m] * nd.dz[m * p + u] * nd.dz[m * p + v] +
                    nd.s1[m] * nd.d2z[m * p * p + u * p + v];
            }
            d2pk[u * p + v] = d2;
          }
        }
        for (int u = 0; u < p; ++u)
          for (int v = u; v < p; ++v) {
            double t = r * (d2pk[u * p + v] / pc - dpk[u] * dpk[v] / (pc * pc));
            (*hess)[u * p + v] += t;
            if (u != v) (*hess)[v * p + u] += t;
          }
      }
    }
  }
}

std::vector<double> graded_gradient(const ItemExpectedCounts& counts, const QuadratureGrid& grid,
                                    const std::vector<double>& psi) {
  std::vector<double> g;
  graded_derivs(counts, grid, psi, &g, nullptr);
  return g;
}

std::vector<double> graded_hessian(const ItemExpectedCounts& counts, const QuadratureGrid& grid,
                                   const std::vector<double>& psi) {
  std::vector<double> h;
  graded_derivs(counts, grid, psi, nullptr, &h);
  return h;
}

}  // namespace mstep

// ---------------------------------------------------------------------------
// Newton driver
// ---------------------------------------------------------------------------

namespace {

template <typename Obj, typename Grad, typename Hess>
std::vector<double> newton_maximize(std::vector<double> psi, Obj obj, Grad grad_fn, Hess hess_fn,
                                    const CalibrationConfig& config, const std::string& item_id) {
  const std::size_t p = psi.size();
  // Steps at or below this size are deep inside the quadratic basin; taking
  // them without a line search keeps the iteration branch-free, so parameter
  // results do not pick up order-dependent last-ulp noise through flipped
  // accept/reject decisions.
  const double basin = 1e-4;
  psi[0] = std::clamp(psi[0], -config.slope_clamp, config.slope_clamp);
  double fcur = obj(psi);
  if (!std::isfinite(fcur))
    throw NumericalFailureError("m_step: non-finite objective for item " + item_id);

  std::vector<double> cand(p);
  for (int iter = 0; iter < config.inner_newton_max_iter; ++iter) {
    std::vector<double> g = grad_fn(psi);
    for (double v : g)
      if (!std::isfinite(v))
        throw NumericalFailureError("m_step: non-finite gradient for item " + item_id);
    std::vector<double> h = hess_fn(psi);

    // Newton direction: solve (-H) delta = g. Fall back to scaled ascent.
    std::vector<double> neg_h(p * p);
    for (std::size_t i = 0; i < p * p; ++i) neg_h[i] = -h[i];
    std::vector<double> delta = g;
    bool solved = solve_linear(neg_h, delta, p);
    if (solved) {
      double dot = 0.0;
      for (std::size_t i = 0; i < p; ++i) dot += delta[i] * g[i];
      if (!(dot > 0.0)) solved = false;  // not an ascent direction
    }
    if (!solved) {
      double norm = 0.0;
      for (double v : g) norm = std::max(norm, std::fabs(v));
      if (norm == 0.0) break;
      delta = g;
      for (double& v : delta) v /= (1.0 + norm);
    }

    double delta_size = 0.0;
    for (std::size_t i = 0; i < p; ++i) delta_size = std::max(delta_size, std::fabs(delta[i]));

    if (solved && delta_size <= basin) {
      for (std::size_t i = 0; i < p; ++i) cand[i] = psi[i] + delta[i];
      cand[0] = std::clamp(cand[0], -config.slope_clamp, config.slope_clamp);
      double fc = obj(cand);
      if (std::isfinite(fc) && fc >= fcur - 1e-6 * (1.0 + std::fabs(fcur))) {
        psi = cand;
        fcur = fc;
        if (delta_size < config.inner_newton_tolerance) break;
        continue;
      }
      // Fall through to the guarded search on the rare bad basin step.
    }

    // Halving line search; candidate slope stays inside the clamp box.
    double t = 1.0;
    bool improved = false;
    double step_size = 0.0;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t i = 0; i < p; ++i) cand[i] = psi[i] + t * delta[i];
      cand[0] = std::clamp(cand[0], -config.slope_clamp, config.slope_clamp);
      double fc = obj(cand);
      if (std::isfinite(fc) && fc > fcur) {
        step_size = 0.0;
        for (std::size_t i = 0; i < p; ++i)
          step_size = std::max(step_size, std::fabs(cand[i] - psi[i]));
        psi = cand;
        fcur = fc;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;                                // stationary or boundary
    if (step_size < config.inner_newton_tolerance) break;
  }
  return psi;
}

ItemParams update_dich_item(const ItemExpectedCounts& counts, const ItemParams& current,
                            const QuadratureGrid& grid, const CalibrationConfig& config) {
  const auto& d = current.dich();
  std::vector<double> psi = {d.a, d.d};
  psi = newton_maximize(
      psi, [&](const std::vector<double>& x) { return mstep::dich_objective(counts, grid, x.data()); },
      [&](const std::vector<double>& x) {
        std::vector<double> g(2);
        mstep::dich_gradient(counts, grid, x.data(), g.data());
        return g;
      },
      [&](const std::vector<double>& x) {
        std::vector<double> h(4);
        mstep::dich_hessian(counts, grid, x.data(), h.data());
        return h;
      },
      config, current.id);
  return {current.id, Dichotomous2PL::from_ad(psi[0], psi[1])};
}

ItemParams update_graded_item(const ItemExpectedCounts& counts, const ItemParams& current,
                              const QuadratureGrid& grid, const CalibrationConfig& config) {
  const auto& g = current.graded();
  std::vector<double> psi = mstep::pack_graded(g);
  psi = newton_maximize(
      psi, [&](const std::vector<double>& x) { return mstep::graded_objective(counts, grid, x); },
      [&](const std::vector<double>& x) { return mstep::graded_gradient(counts, grid, x); },
      [&](const std::vector<double>& x) { return mstep::graded_hessian(counts, grid, x); },
      config, current.id);
  GradedParams out = g;
  out.a = psi[0];
  out.thresholds = mstep::unpack_thresholds(psi);
  return {current.id, std::move(out)};
}

}  // namespace

std::vector<ItemParams> m_step(const std::vector<ItemExpectedCounts>& counts,
                               const std::vector<ItemParams>& current,
                               const QuadratureGrid& grid, const CalibrationConfig& config) {
  if (counts.size() != current.size())
    throw InvalidInputError("m_step: counts/params size mismatch");
  std::vector<ItemParams> updated(current.size());
  std::vector<std::string> failures(current.size());
  parallel_for_blocks(current.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) {
      try {
        updated[j] = current[j].is_dichotomous()
                         ? update_dich_item(counts[j], current[j], grid, config)
                         : update_graded_item(counts[j], current[j], grid, config);
      } catch (const std::exception& e) {
        failures[j] = e.what();
      }
    }
  });
  for (const auto& f : failures)
    if (!f.empty()) throw NumericalFailureError(f);
  return updated;
}

// ---------------------------------------------------------------------------
// Start values
// ---------------------------------------------------------------------------

std::vector<ItemParams> start_values(const ResponseMatrix& matrix, std::uint64_t seed) {
  std::vector<ItemParams> params;
  params.reserve(matrix.n_items());
  for (std::size_t j = 0; j < matrix.n_items(); ++j) {
    const ItemSpec& spec = matrix.item(j);
    if (spec.kind == ItemKind::dichotomous) {
      double n = 0.0, correct = 0.0;
      for (std::size_t p = 0; p < matrix.n_persons(); ++p) {
        int x = matrix.cell(p, j);
        if (x == ResponseMatrix::kAbsent) continue;
        n += 1.0;
        correct += x;
      }
      double prop = std::clamp(n > 0.0 ? correct / n : 0.5, 1.0 / (n + 2.0), (n + 1.0) / (n + 2.0));
      params.push_back({spec.id, Dichotomous2PL::from_ad(1.0, std::log(prop / (1.0 - prop)))});
    } else {
      // Collapse to the categories actually observed.
      std::vector<int> count(spec.n_categories, 0);
      int n = 0;
      for (std::size_t p = 0; p < matrix.n_persons(); ++p) {
        int x = matrix.cell(p, j);
        if (x == ResponseMatrix::kAbsent) continue;
        ++count[x - 1];
        ++n;
      }
      GradedParams g;
      g.category_map.resize(spec.n_categories);
      std::vector<int> modeled_count;
      int rank = 0;
      for (int c = 0; c < spec.n_categories; ++c) {
        if (count[c] > 0) {
          ++rank;
          modeled_count.push_back(count[c]);
        }
        g.category_map[c] = std::max(rank, 1);
      }
      const int k = static_cast<int>(modeled_count.size());
      // Thresholds from cumulative observed proportions (a = 1 start).
      g.thresholds.resize(k - 1);
      int above = n;
      for (int c = 0; c < k - 1; ++c) {
        above -= modeled_count[c];
        double q = static_cast<double>(above) / n;
        g.thresholds[c] = -std::log(q / (1.0 - q));
      }
      // Degenerate spacing gets a seeded jitter so log-gaps stay finite.
      bool degenerate = false;
      for (int c = 1; c < k - 1; ++c)
        if (!(g.thresholds[c] - g.thresholds[c - 1] > 1e-6)) degenerate = true;
      if (degenerate) {
        Rng rng(derive_seed(seed, j));
        for (int c = 1; c < k - 1; ++c) {
          double min_th = g.thresholds[c - 1] + 1e-3;
          if (g.thresholds[c] < min_th) g.thresholds[c] = min_th + 0.01 * rng.uniform();
        }
      }
      params.push_back({spec.id, std::move(g)});
    }
  }
  return params;
}

// ---------------------------------------------------------------------------
// Standard errors (cross-product approximation)
// ---------------------------------------------------------------------------

namespace {

// Reporting parametrization per item: (a, b) for stable 2PL, (a, d) when b is
// unstable, (a, thresholds...) for graded.
int report_dim(const ItemParams& p) {
  return p.is_dichotomous() ? 2 : 1 + static_cast<int>(p.graded().thresholds.size());
}

// Score of log P(x | theta) in the reporting parametrization.
void complete_score(const ItemParams& p, int x, double theta, double* out) {
  if (p.is_dichotomous()) {
    const auto& d = p.dich();
    double prob = icc_2pl(theta, d);
    double resid = (x == 1 ? 1.0 : 0.0) - prob;
    if (d.b.has_value()) {
      out[0] = resid * (theta - *d.b);
      out[1] = resid * (-d.a);
    } else {
      out[0] = resid * theta;  // (a, d) parametrization
      out[1] = resid;
    }
    return;
  }
  const auto& g = p.graded();
  const int k = g.n_modeled();
  int cat = g.remap(x);  // 1-based modeled category
  double z_up = cat > 1 ? g.a * (theta - g.thresholds[cat - 2]) : 0.0;
  double z_lo = cat < k ? g.a * (theta - g.thresholds[cat - 1]) : 0.0;
  double pc;
  if (cat == 1)
    pc = logistic(-z_lo);
  else if (cat == k)
    pc = logistic(z_up);
  else
    pc = logistic_diff(z_up, z_lo);
  pc = std::max(pc, kProbFloor);
  for (int u = 0; u <= k - 1; ++u) out[u] = 0.0;
  // d log pc / da and / db_m with only the two bracketing thresholds active.
  double da = 0.0;
  if (cat > 1) {
    double s1 = logistic(z_up) * logistic(-z_up);
    da += s1 * (theta - g.thresholds[cat - 2]);
    out[1 + (cat - 2)] += -g.a * s1 / pc;
  }
  if (cat < k) {
    double s1 = logistic(z_lo) * logistic(-z_lo);
    da -= s1 * (theta - g.thresholds[cat - 1]);
    out[1 + (cat - 1)] -= -g.a * s1 / pc;
  }
  out[0] = da / pc;
}

}  // namespace

SeResult standard_errors(const ResponseMatrix& matrix, const std::vector<ItemParams>& params,
                         const QuadratureGrid& grid, double slope_clamp) {
  check_alignment(matrix, params);
  const std::size_t nj = params.size();
  std::vector<int> offsets(nj + 1, 0);
  for (std::size_t j = 0; j < nj; ++j) offsets[j + 1] = offsets[j] + report_dim(params[j]);
  const int dim = offsets[nj];

  PosteriorTable post = e_step(matrix, params, grid);
  std::vector<double> info(static_cast<std::size_t>(dim) * dim, 0.0);
  std::vector<double> score(dim), block(8);

  for (std::size_t p = 0; p < matrix.n_persons(); ++p) {
    std::fill(score.begin(), score.end(), 0.0);
    bool any = false;
    for (std::size_t j = 0; j < nj; ++j) {
      int x = matrix.cell(p, j);
      if (x == ResponseMatrix::kAbsent) continue;
      any = true;
      const int d = report_dim(params[j]);
      block.assign(d, 0.0);
      std::vector<double> tmp(d);
      for (std::size_t q = 0; q < grid.size(); ++q) {
        complete_score(params[j], x, grid.nodes[q], tmp.data());
        double w = post.at(p, q);
        for (int u = 0; u < d; ++u) block[u] += w * tmp[u];
      }
      for (int u = 0; u < d; ++u) score[offsets[j] + u] = block[u];
    }
    if (!any) continue;
    for (int u = 0; u < dim; ++u) {
      if (score[u] == 0.0) continue;
      for (int v = u; v < dim; ++v) info[u * dim + v] += score[u] * score[v];
    }
  }
  for (int u = 0; u < dim; ++u)
    for (int v = 0; v < u; ++v) info[u * dim + v] = info[v * dim + u];

  SeResult out;
  double pivot_ratio = 0.0;
  std::vector<double> inv = info;
  bool ok = invert_matrix(inv, dim, &pivot_ratio);
  bool near_singular = !ok || pivot_ratio < 1e-12;
  out.information_singular = near_singular;
  if (!ok) {
    // Diagonal fallback keeps per-parameter scale information.
    inv.assign(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int u = 0; u < dim; ++u)
      inv[u * dim + u] = info[u * dim + u] > 0.0 ? 1.0 / info[u * dim + u]
                                                 : std::numeric_limits<double>::infinity();
  }

  out.items.resize(nj);
  for (std::size_t j = 0; j < nj; ++j) {
    const int d = report_dim(params[j]);
    ItemStandardErrors se;
    std::vector<double> vals(d);
    for (int u = 0; u < d; ++u) {
      double v = inv[(offsets[j] + u) * dim + (offsets[j] + u)];
      vals[u] = v >= 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
    }
    se.se_a = vals[0];
    se.se_loc.assign(vals.begin() + 1, vals.end());
    double a = params[j].discrimination();
    se.unreliable = near_singular || std::fabs(std::fabs(a) - slope_clamp) < 1e-6 ||
                    (params[j].is_dichotomous() && !params[j].dich().b.has_value());
    for (double v : vals)
      if (!std::isfinite(v)) se.unreliable = true;
    out.items[j] = std::move(se);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full fit
// ---------------------------------------------------------------------------

CalibrationResult fit_mixed(const ResponseMatrix& matrix, const CalibrationConfig& config) {
  if (matrix.n_persons() < 2) throw InsufficientDataError("fit_mixed: need at least 2 persons");
  ScreenResult screen = screen_items(matrix);
  if (screen.kept.size() < 2)
    throw InsufficientDataError("fit_mixed: fewer than 2 items survive screening");

  ResponseMatrix sub = matrix.select_items(screen.kept);
  QuadratureGrid grid = gauss_hermite_grid(config.n_quadrature);
  std::vector<ItemParams> params = start_values(sub, config.seed);

  CalibrationResult result;
  result.dropped = std::move(screen.dropped);
  result.config = config;

  double ll = -std::numeric_limits<double>::infinity();
  int cycle = 0;
  bool converged = false;
  for (cycle = 1; cycle <= config.max_em_cycles; ++cycle) {
    PosteriorTable post = e_step(sub, params, grid);
    auto counts = expected_counts(sub, params, post);
    std::vector<ItemParams> updated = m_step(counts, params, grid, config);

    double delta = 0.0;
    for (std::size_t j = 0; j < params.size(); ++j) {
      if (params[j].is_dichotomous()) {
        delta = std::max(delta, std::fabs(updated[j].dich().a - params[j].dich().a));
        delta = std::max(delta, std::fabs(updated[j].dich().d - params[j].dich().d));
      } else {
        delta = std::max(delta, std::fabs(updated[j].graded().a - params[j].graded().a));
        for (std::size_t t = 0; t < params[j].graded().thresholds.size(); ++t)
          delta = std::max(delta, std::fabs(updated[j].graded().thresholds[t] -
                                            params[j].graded().thresholds[t]));
      }
    }
    params = std::move(updated);
    ll = marginal_log_likelihood(sub, params, grid);
    if (!std::isfinite(ll))
      throw NumericalFailureError("fit_mixed: non-finite marginal log-likelihood at cycle " +
                                  std::to_string(cycle));
    result.cycle_log_likelihoods.push_back(ll);
    if (delta < config.em_tolerance) {
      converged = true;
      break;
    }
  }
  result.items = std::move(params);
  result.log_likelihood = ll;
  result.n_cycles = std::min(cycle, config.max_em_cycles);
  result.converged = converged;
  result.ses = standard_errors(sub, result.items, grid, config.slope_clamp).items;
  return result;
}

}  // namespace qacal
