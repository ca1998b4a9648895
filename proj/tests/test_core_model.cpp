#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qacal/errors.hpp"
#include "qacal/model.hpp"
#include "qacal/quadrature.hpp"
#include "qacal/response_matrix.hpp"
#include "qacal/rng.hpp"

using namespace qacal;

namespace {

// Independent scalar oracle for the 2PL curve.
double logistic_ref(double z) { return 1.0 / (1.0 + std::exp(-z)); }

GradedParams make_graded(double a, std::vector<double> thresholds, int declared = -1) {
  GradedParams g;
  g.a = a;
  g.thresholds = std::move(thresholds);
  int k = declared > 0 ? declared : static_cast<int>(g.thresholds.size()) + 1;
  g.category_map = GradedParams::identity_map(k);
  return g;
}

}  // namespace

TEST_CASE("icc_2pl midpoint and frozen values") {
  // At theta = b the curve is exactly 0.5 (exam_7 parameters).
  auto exam7 = Dichotomous2PL::from_ab(1.9899, -1.5402);
  CHECK(icc_2pl(-1.5402, exam7) == doctest::Approx(0.5).epsilon(1e-14));

  auto unit = Dichotomous2PL::from_ab(1.0, 0.0);
  CHECK(icc_2pl(0.0, unit) == doctest::Approx(0.5).epsilon(1e-14));

  // exam_8 parameters at theta = 0; frozen from a direct scalar evaluation
  // of logistic(a * (0 - b)) = logistic(4.2668...).
  auto exam8 = Dichotomous2PL::from_ab(2.0554, -2.0759);
  CHECK(icc_2pl(0.0, exam8) == doctest::Approx(0.9861674936884927).epsilon(1e-10));
  CHECK(std::fabs(icc_2pl(0.0, exam8) - 0.98617) < 1e-4);
}

TEST_CASE("icc_2pl saturates and stays monotone") {
  auto p = Dichotomous2PL::from_ab(2.0, 0.5);
  CHECK(icc_2pl(1000.0, p) == 1.0);
  CHECK(icc_2pl(-1000.0, p) == 0.0);
  double prev = -1.0;
  for (double t = -10.0; t <= 10.0; t += 0.25) {
    double v = icc_2pl(t, p);
    CHECK(v > prev);
    prev = v;
  }
  // Negative slope flips the direction and keeps the midpoint.
  auto neg = Dichotomous2PL::from_ab(-1.5, 0.25);
  CHECK(icc_2pl(0.25, neg) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(icc_2pl(3.0, neg) < icc_2pl(-3.0, neg));
}

TEST_CASE("grm_category_probs matches the cumulative-difference oracle") {
  // assess_10 parameters from the graded table, theta = 0. Oracle: the four
  // cumulative logistics evaluated directly and differenced.
  auto g = make_graded(2.8401, {-2.0803, -1.4898, -0.4599, 0.0963});
  auto probs = grm_category_probs(0.0, g);
  REQUIRE(probs.size() == 5);

  double cum[6] = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  for (int j = 0; j < 4; ++j) cum[j + 1] = logistic_ref(g.a * (0.0 - g.thresholds[j]));
  cum[5] = 0.0;
  for (int k = 0; k < 5; ++k)
    CHECK(probs[k] == doctest::Approx(cum[k] - cum[k + 1]).epsilon(1e-13));

  // Frozen from the oracle above.
  CHECK(std::fabs(probs[0] - 0.0027) < 1e-3);
  CHECK(std::fabs(probs[1] - 0.0116) < 1e-3);
  CHECK(std::fabs(probs[2] - 0.1987) < 1e-3);
  CHECK(std::fabs(probs[3] - 0.3549) < 1e-3);
  CHECK(std::fabs(probs[4] - 0.4321) < 1e-3);

  // P(X >= 5) = 0.5 exactly at theta = b4.
  CHECK(grm_cumulative(0.0963, g, 3) == doctest::Approx(0.5).epsilon(1e-14));

  double sum = 0.0;
  for (double p : probs) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("grm rejects non-increasing thresholds") {
  auto g = make_graded(1.0, {0.5, 0.5});
  CHECK_THROWS_AS(grm_category_probs(0.0, g), InvalidInputError);
  auto g2 = make_graded(1.0, {1.0, -1.0});
  CHECK_THROWS_AS(grm_category_probs(0.0, g2), InvalidInputError);
}

TEST_CASE("grm probabilities sum to 1 over random parameters") {
  Rng rng(20240531);
  for (int rep = 0; rep < 200; ++rep) {
    int k = 2 + static_cast<int>(rng.below(5));  // 2..6 categories
    double a = 0.2 + 2.8 * rng.uniform();
    std::vector<double> th(k - 1);
    double t = -4.0 + 2.0 * rng.uniform();
    for (int j = 0; j < k - 1; ++j) {
      th[j] = t;
      t += 0.05 + 2.0 * rng.uniform();
    }
    auto g = make_graded(a, th);
    double theta = -10.0 + 20.0 * rng.uniform();
    auto probs = grm_category_probs(theta, g);
    double sum = 0.0;
    for (double p : probs) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("K=2 graded model nests the 2PL") {
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    double a = 0.3 + 2.0 * rng.uniform();
    double b = -2.0 + 4.0 * rng.uniform();
    auto g = make_graded(a, {b});
    auto p2 = Dichotomous2PL::from_ab(a, b);
    double theta = -5.0 + 10.0 * rng.uniform();
    auto probs = grm_category_probs(theta, g);
    CHECK(std::fabs(probs[1] - icc_2pl(theta, p2)) < 1e-12);
  }
}

TEST_CASE("slope_intercept_to_difficulty") {
  // exam_10 parameters: b = -d/a.
  auto b = slope_intercept_to_difficulty(0.0582, 2.6420);
  REQUIRE(b.has_value());
  CHECK(*b == doctest::Approx(-45.395).epsilon(2e-4));
  CHECK(*b == doctest::Approx(-45.39518900343642).epsilon(1e-12));

  auto zero = slope_intercept_to_difficulty(1.0, 0.0);
  REQUIRE(zero.has_value());
  CHECK(*zero == 0.0);

  CHECK(!slope_intercept_to_difficulty(1e-9, 1.0).has_value());
  CHECK(!slope_intercept_to_difficulty(0.0, 0.5).has_value());

  // Round trip b -> d = -a*b -> b is identity for |a| >= eps.
  Rng rng(99);
  for (int rep = 0; rep < 100; ++rep) {
    double a = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (1e-6 + 3.0 * rng.uniform());
    double bb = -30.0 + 60.0 * rng.uniform();
    auto back = slope_intercept_to_difficulty(a, -a * bb);
    REQUIRE(back.has_value());
    CHECK(std::fabs(*back - bb) < 1e-9 * std::max(1.0, std::fabs(bb)));
  }

  // from_ab keeps d = -a*b within 1e-9.
  auto p = Dichotomous2PL::from_ab(1.7, -2.3);
  CHECK(std::fabs(p.d - (-p.a * *p.b)) < 1e-9);
}

TEST_CASE("screen_items drops constants and thin items") {
  std::vector<std::string> persons;
  for (int p = 0; p < 45; ++p) persons.push_back("p" + std::to_string(p));
  std::vector<ItemSpec> items;
  for (int i = 0; i < 22; ++i) items.push_back({"exam_" + std::to_string(i + 1)});
  ResponseMatrix m(persons, items);
  for (std::size_t p = 0; p < 45; ++p) {
    for (std::size_t i = 0; i < 22; ++i) {
      int v;
      if (i < 5)
        v = 1;  // five constant items
      else
        v = static_cast<int>((p + i) % 2);
      m.set_cell(p, i, v);
    }
  }
  auto res = screen_items(m);
  CHECK(res.kept.size() == 17);
  CHECK(res.dropped.size() == 5);
  for (const auto& d : res.dropped) CHECK(d.reason == "zero variance");
  CHECK(res.kept.size() + res.dropped.size() == m.n_items());

  // Screening the kept submatrix drops nothing (idempotence).
  auto sub = m.select_items(res.kept);
  auto again = screen_items(sub);
  CHECK(again.dropped.empty());
  CHECK(again.kept.size() == res.kept.size());
}

TEST_CASE("screen_items reasons and errors") {
  ResponseMatrix m({"p1", "p2", "p3"}, {{"i1"}, {"i2"}, {"i3"}});
  // i1: all absent -> insufficient. i2: single response -> insufficient.
  // i3: has variance -> kept.
  m.set_cell(0, 1, 1);
  m.set_cell(0, 2, 0);
  m.set_cell(1, 2, 1);
  m.set_cell(2, 2, 0);
  auto res = screen_items(m);
  REQUIRE(res.dropped.size() == 2);
  CHECK(res.dropped[0].id == "i1");
  CHECK(res.dropped[0].reason == "insufficient responses");
  CHECK(res.dropped[1].id == "i2");
  CHECK(res.dropped[1].reason == "insufficient responses");
  REQUIRE(res.kept.size() == 1);
  CHECK(m.item(res.kept[0]).id == "i3");

  ResponseMatrix empty;
  CHECK_THROWS_AS(screen_items(empty), InvalidInputError);
}

TEST_CASE("response matrix invariants") {
  CHECK_THROWS_AS(ResponseMatrix({"a", "a"}, {{"i"}}), InvalidInputError);
  CHECK_THROWS_AS(ResponseMatrix({"a"}, {{"i"}, {"i"}}), InvalidInputError);
  CHECK_THROWS_AS(ResponseMatrix({"a"}, {{"g", ItemKind::graded, 1}}), InvalidInputError);

  ResponseMatrix m({"a"}, {{"d"}, {"g", ItemKind::graded, 5}});
  CHECK_THROWS_AS(m.set_cell(0, 0, 2), InvalidInputError);
  CHECK_THROWS_AS(m.set_cell(0, 1, 0), InvalidInputError);
  CHECK_THROWS_AS(m.set_cell(0, 1, 6), InvalidInputError);
  m.set_cell(0, 1, 5);
  CHECK(m.cell(0, 1) == 5);
  CHECK(!m.has_response(0, 0));
}

TEST_CASE("gauss_hermite_grid two-point rule and normalization") {
  auto g2 = gauss_hermite_grid(2);
  REQUIRE(g2.size() == 2);
  CHECK(g2.nodes[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(g2.nodes[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g2.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g2.weights[1] == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(gauss_hermite_grid(1), InvalidInputError);
  CHECK_THROWS_AS(gauss_hermite_grid(201), InvalidInputError);
}

TEST_CASE("gauss_hermite_grid 10-node symmetry and moment exactness") {
  auto g = gauss_hermite_grid(10);
  REQUIRE(g.size() == 10);
  double wsum = 0.0, m1 = 0.0, m2 = 0.0, m4 = 0.0;
  for (std::size_t q = 0; q < 10; ++q) {
    CHECK(g.nodes[q] == doctest::Approx(-g.nodes[9 - q]).epsilon(1e-12));
    CHECK(g.weights[q] == doctest::Approx(g.weights[9 - q]).epsilon(1e-12));
    CHECK(g.weights[q] >= 0.0);
    wsum += g.weights[q];
    m1 += g.weights[q] * g.nodes[q];
    m2 += g.weights[q] * g.nodes[q] * g.nodes[q];
    m4 += g.weights[q] * std::pow(g.nodes[q], 4);
  }
  CHECK(std::fabs(wsum - 1.0) < 1e-12);
  CHECK(std::fabs(m1) < 1e-12);
  CHECK(std::fabs(m2 - 1.0) < 1e-10);  // E[theta^2] under N(0,1)
  CHECK(std::fabs(m4 - 3.0) < 1e-9);   // E[theta^4] = 3
  for (std::size_t q = 1; q < 10; ++q) CHECK(g.nodes[q] > g.nodes[q - 1]);
}

TEST_CASE("gauss_hermite_grid larger rules stay normalized") {
  for (int n : {3, 7, 21, 50, 101, 200}) {
    auto g = gauss_hermite_grid(n);
    double wsum = 0.0, m2 = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) {
      wsum += g.weights[q];
      m2 += g.weights[q] * g.nodes[q] * g.nodes[q];
    }
    CHECK(std::fabs(wsum - 1.0) < 1e-12);
    CHECK(std::fabs(m2 - 1.0) < 1e-9);
  }
}

TEST_CASE("response_prob remaps collapsed graded categories") {
  GradedParams g;
  g.a = 1.4;
  g.thresholds = {-0.8, 0.7};          // 3 modeled categories
  g.category_map = {1, 2, 2, 3, 3};    // 5 declared, middle/top collapsed
  ItemParams item{"assess_x", g};
  auto probs = grm_category_probs(0.3, g);
  CHECK(response_prob(1, item, 0.3) == doctest::Approx(probs[0]));
  CHECK(response_prob(2, item, 0.3) == doctest::Approx(probs[1]));
  CHECK(response_prob(3, item, 0.3) == doctest::Approx(probs[1]));
  CHECK(response_prob(4, item, 0.3) == doctest::Approx(probs[2]));
  CHECK(response_prob(5, item, 0.3) == doctest::Approx(probs[2]));
}
