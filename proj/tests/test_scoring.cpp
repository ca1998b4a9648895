#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "qacal/errors.hpp"
#include "qacal/model.hpp"
#include "qacal/scoring.hpp"

using namespace qacal;
using test::dich;
using test::graded;

TEST_CASE("eap_scores orders all-correct above all-wrong") {
  ResponseMatrix m({"hi", "lo", "none"}, {{"i1"}, {"i2"}, {"i3"}});
  for (int j = 0; j < 3; ++j) {
    m.set_cell(0, j, 1);
    m.set_cell(1, j, 0);
  }
  std::vector<ItemParams> params = {dich("i1", 1.2, 0.0), dich("i2", 0.9, -0.4),
                                    dich("i3", 1.6, 0.5)};
  auto grid = gauss_hermite_grid(10);
  auto est = eap_scores(m, params, grid);
  REQUIRE(est.size() == 3);
  CHECK(est[0].theta_eap > est[1].theta_eap);
  CHECK(est[0].n_items_answered == 3);

  // Person with no responses: prior (0, 1), flagged.
  CHECK(est[2].prior_only);
  CHECK(est[2].theta_eap == 0.0);
  CHECK(est[2].posterior_sd == 1.0);
  CHECK(est[2].n_items_answered == 0);

  // EAP stays strictly inside the node range.
  for (const auto& e : est) {
    CHECK(e.theta_eap > grid.nodes.front());
    CHECK(e.theta_eap < grid.nodes.back());
    CHECK(e.posterior_sd > 0.0);
  }
}

TEST_CASE("eap_scores matches a hand-computed 10-node weighted mean") {
  ResponseMatrix m({"p"}, {{"i1"}, {"i2"}});
  m.set_cell(0, 0, 1);
  m.set_cell(0, 1, 0);
  std::vector<ItemParams> params = {dich("i1", 1.5, -0.2), dich("i2", 0.8, 0.7)};
  auto grid = gauss_hermite_grid(10);
  auto est = eap_scores(m, params, grid);

  // Direct per-node arithmetic.
  double norm = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t q = 0; q < grid.size(); ++q) {
    double lik = icc_2pl(grid.nodes[q], params[0].dich()) *
                 (1.0 - icc_2pl(grid.nodes[q], params[1].dich()));
    double w = grid.weights[q] * lik;
    norm += w;
    m1 += w * grid.nodes[q];
    m2 += w * grid.nodes[q] * grid.nodes[q];
  }
  m1 /= norm;
  m2 /= norm;
  CHECK(std::fabs(est[0].theta_eap - m1) < 1e-10);
  CHECK(std::fabs(est[0].posterior_sd - std::sqrt(m2 - m1 * m1)) < 1e-10);
}

TEST_CASE("posterior sd decreases on nested simulated response sets") {
  // Simulate full model-consistent response vectors, then score nested
  // prefixes of the test: the average posterior sd must shrink (weakly) as
  // items accumulate.
  auto items = test::spread_2pl_bank(16, 0.8, 1.8, -1.5, 1.5);
  auto sim = simulate_responses(test::basic_spec(items, 150, 401));
  auto grid = gauss_hermite_grid(10);

  double last_mean_sd = 1.0;
  for (std::size_t n_items : {2u, 4u, 8u, 12u, 16u}) {
    std::vector<std::size_t> keep(n_items);
    for (std::size_t j = 0; j < n_items; ++j) keep[j] = j;
    auto sub = sim.matrix.select_items(keep);
    std::vector<ItemParams> sub_params(items.begin(), items.begin() + n_items);
    auto est = eap_scores(sub, sub_params, grid);
    double mean_sd = 0.0;
    for (const auto& e : est) mean_sd += e.posterior_sd;
    mean_sd /= est.size();
    CHECK(mean_sd <= last_mean_sd + 1e-12);
    last_mean_sd = mean_sd;
  }
}

TEST_CASE("2PL information peaks at b with value a^2/4") {
  auto item = dich("i", 2.0, 0.0);
  CHECK(item_information(item, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(item_information(item, 0.5) < 1.0);
  CHECK(item_information(item, -0.5) < 1.0);
  // Symmetric around b.
  CHECK(item_information(item, 0.7) == doctest::Approx(item_information(item, -0.7)));
}

TEST_CASE("test_information is additive and reorder-invariant") {
  std::vector<ItemParams> params = {dich("a", 1.0, -0.5), dich("b", 1.7, 0.4),
                                    graded("g", 1.3, {-1.0, 0.0, 1.2})};
  auto grid_pts = default_theta_grid();
  REQUIRE(grid_pts.size() == 101);
  CHECK(grid_pts.front() == doctest::Approx(-4.0));
  CHECK(grid_pts.back() == doctest::Approx(4.0));

  auto curve = test_information(params, grid_pts);
  for (std::size_t t = 0; t < grid_pts.size(); ++t) {
    double sum = 0.0;
    for (std::size_t j = 0; j < params.size(); ++j) {
      CHECK(curve.at(j, t) >= 0.0);
      sum += curve.at(j, t);
    }
    CHECK(curve.total[t] == doctest::Approx(sum).epsilon(1e-12));
  }

  // Doubling an item doubles its contribution pointwise.
  std::vector<ItemParams> doubled = params;
  doubled.push_back({"b2", params[1].params});
  auto curve2 = test_information(doubled, grid_pts);
  for (std::size_t t = 0; t < grid_pts.size(); ++t)
    CHECK(curve2.total[t] ==
          doctest::Approx(curve.total[t] + curve.at(1, t)).epsilon(1e-12));

  // Reordering leaves totals untouched.
  std::vector<ItemParams> reversed(params.rbegin(), params.rend());
  auto curve3 = test_information(reversed, grid_pts);
  for (std::size_t t = 0; t < grid_pts.size(); ++t)
    CHECK(curve3.total[t] == doctest::Approx(curve.total[t]).epsilon(1e-12));
}

TEST_CASE("GRM information dominates any dichotomized split of the item") {
  // assess_10 parameters from the graded table.
  auto g = graded("assess_10", 2.8401, {-2.0803, -1.4898, -0.4599, 0.0963});
  for (double theta = -4.0; theta <= 4.0; theta += 0.1) {
    double grm_info = item_information(g, theta);
    for (int split = 0; split < 4; ++split) {
      // Dichotomizing at >= category split+2 gives a 2PL at that threshold.
      auto d = dich("split", 2.8401, g.graded().thresholds[split]);
      CHECK(grm_info >= item_information(d, theta) - 1e-9);
    }
  }
}

TEST_CASE("align_to_params rejects missing columns") {
  ResponseMatrix m({"p"}, {{"present"}});
  std::vector<ItemParams> params = {dich("missing", 1.0, 0.0)};
  CHECK_THROWS_AS(eap_scores(m, params, gauss_hermite_grid(10)), InvalidInputError);
}
