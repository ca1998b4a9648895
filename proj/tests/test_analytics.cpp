#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "qacal/analytics.hpp"
#include "qacal/errors.hpp"
#include "qacal/rng.hpp"

using namespace qacal;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

OpinionTable make_opinions(std::vector<std::string> persons, std::vector<std::string> questions) {
  OpinionTable t;
  t.person_ids = std::move(persons);
  t.questions = std::move(questions);
  t.opinion.assign(t.person_ids.size() * t.questions.size(), "");
  t.comment.assign(t.person_ids.size() * t.questions.size(), "");
  t.alternative.assign(t.person_ids.size() * t.questions.size(), "");
  return t;
}

}  // namespace

TEST_CASE("aggregate_items joins exam, assess and opinion data by suffix") {
  std::vector<std::string> persons;
  for (int p = 0; p < 12; ++p) persons.push_back("p" + std::to_string(p));
  ResponseMatrix m(persons, {{"exam_1"}, {"exam_2"}, {"assess_1", ItemKind::graded, 5}});
  for (int p = 0; p < 12; ++p) {
    m.set_cell(p, 0, 1);             // everyone right on exam_1
    m.set_cell(p, 1, p % 2);         // half right on exam_2
    m.set_cell(p, 2, 1 + (p % 5));   // ratings 1..5 cycling
  }
  auto opinions = make_opinions(persons, {"1"});
  for (int p = 0; p < 12; ++p)
    opinions.opinion[p] = p < 9 ? "reasonable" : "ambiguous";

  std::vector<ItemParams> params = {test::dich("exam_1", 1.4, -0.8),
                                    test::dich("exam_2", 0.9, 0.5)};
  auto res = aggregate_items(m, opinions, params);
  REQUIRE(res.rows.size() == 2);

  const auto& q1 = res.rows[0];
  CHECK(q1.question == "1");
  REQUIRE(q1.mean_exam_score.has_value());
  CHECK(*q1.mean_exam_score == 1.0);
  REQUIRE(q1.mean_assessment.has_value());
  CHECK(*q1.mean_assessment == doctest::Approx((1 + 2 + 3 + 4 + 5 + 1 + 2 + 3 + 4 + 5 + 1 + 2) / 12.0));
  REQUIRE(q1.prop_reasonable.has_value());
  CHECK(*q1.prop_reasonable == doctest::Approx(0.75));
  CHECK(*q1.prop_ambiguous == doctest::Approx(0.25));
  CHECK(*q1.prop_too_easy == 0.0);
  REQUIRE(q1.discrimination.has_value());
  CHECK(*q1.discrimination == doctest::Approx(1.4));
  REQUIRE(q1.difficulty.has_value());
  CHECK(*q1.difficulty == doctest::Approx(-0.8));

  const auto& q2 = res.rows[1];
  CHECK(*q2.mean_exam_score == doctest::Approx(0.5));
  CHECK(!q2.mean_assessment.has_value());
  CHECK(!q2.prop_reasonable.has_value());
}

TEST_CASE("aggregate_items excludes empty questions and is person-permutation invariant") {
  ResponseMatrix m({"a", "b", "c"}, {{"exam_1"}, {"exam_2"}});
  m.set_cell(0, 0, 1);
  m.set_cell(1, 0, 0);
  m.set_cell(2, 0, 1);  // exam_2 entirely absent
  auto res = aggregate_items(m, make_opinions({"a", "b", "c"}, {}), {});
  REQUIRE(res.rows.size() == 1);
  REQUIRE(res.excluded.size() == 1);
  CHECK(res.excluded[0].question == "2");
  CHECK(res.excluded[0].reason == "no responses");

  ResponseMatrix perm({"c", "a", "b"}, {{"exam_1"}, {"exam_2"}});
  perm.set_cell(0, 0, 1);
  perm.set_cell(1, 0, 1);
  perm.set_cell(2, 0, 0);
  auto res2 = aggregate_items(perm, make_opinions({"c", "a", "b"}, {}), {});
  CHECK(*res.rows[0].mean_exam_score == *res2.rows[0].mean_exam_score);
}

TEST_CASE("pearson_matrix frozen example and affine invariance") {
  std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> y = {2, 1, 4, 3, 5};
  auto m = pearson_matrix({"x", "y"}, {x, y});
  CHECK(m.r_at(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
  // Frozen from the closed-form t test: t = 2.3094, df = 3.
  CHECK(m.p_at(0, 1) == doctest::Approx(0.10408803866182778).epsilon(1e-9));
  CHECK(m.r_at(0, 0) == 1.0);
  CHECK(m.r_at(1, 1) == 1.0);
  CHECK(m.r_at(1, 0) == m.r_at(0, 1));

  // Perfect correlations.
  std::vector<double> two_x_3 = {5, 7, 9, 11, 13};
  auto perfect = pearson_matrix({"x", "ax+b"}, {x, two_x_3});
  CHECK(perfect.r_at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> neg = {-1, -2, -3, -4, -5};
  auto anti = pearson_matrix({"x", "-x"}, {x, neg});
  CHECK(anti.r_at(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));

  // Positive affine transforms leave r untouched.
  Rng rng(8);
  std::vector<double> u(30), v(30), u_aff(30);
  for (int i = 0; i < 30; ++i) {
    u[i] = rng.normal();
    v[i] = 0.6 * u[i] + rng.normal();
    u_aff[i] = 3.7 * u[i] + 11.0;
  }
  auto base = pearson_matrix({"u", "v"}, {u, v});
  auto aff = pearson_matrix({"u", "v"}, {u_aff, v});
  CHECK(std::fabs(base.r_at(0, 1) - aff.r_at(0, 1)) < 1e-12);
}

TEST_CASE("pearson_matrix pairwise-complete handling") {
  std::vector<double> x = {1, 2, kNaN, 4, 5};
  std::vector<double> y = {2, 4, 6, kNaN, 10};
  auto m = pearson_matrix({"x", "y"}, {x, y});
  CHECK(m.n[1] == 3);  // (1,2),(2,4),(5,10)
  CHECK(m.r_at(0, 1) == doctest::Approx(1.0));

  // Fewer than 3 complete pairs -> unavailable.
  std::vector<double> sparse = {1, kNaN, kNaN, kNaN, 5};
  auto un = pearson_matrix({"x", "s"}, {x, sparse});
  CHECK(std::isnan(un.r_at(0, 1)));
  CHECK(std::isnan(un.p_at(0, 1)));
}

TEST_CASE("exact_agreement counts identical star categories") {
  auto full = exact_agreement("e1", {1, 2, 3, 4}, "e2", {1, 2, 3, 4});
  CHECK(full.percent_exact_agreement == 1.0);
  CHECK(full.n_items == 4);

  auto three_quarters = exact_agreement("e1", {1, 2, 3, 4}, "e2", {1, 2, 4, 4});
  CHECK(three_quarters.percent_exact_agreement == doctest::Approx(0.75));

  // 22 items, agree on 12, both raters rate everything.
  std::vector<int> a(22), b(22);
  for (int i = 0; i < 22; ++i) {
    a[i] = 1 + i % 5;
    b[i] = i < 12 ? a[i] : 1 + (i + 1) % 5;
  }
  auto two_experts = exact_agreement("e1", a, "e2", b);
  CHECK(two_experts.percent_exact_agreement == doctest::Approx(12.0 / 22.0));
  CHECK(two_experts.n_items == 22);

  // Only commonly rated items count; -1 marks unrated.
  auto partial = exact_agreement("e1", {1, -1, 3, 4}, "e2", {1, 2, -1, 4});
  CHECK(partial.n_items == 2);
  CHECK(partial.percent_exact_agreement == 1.0);

  // Symmetry.
  auto swapped = exact_agreement("e2", b, "e1", a);
  CHECK(swapped.percent_exact_agreement == two_experts.percent_exact_agreement);

  CHECK_THROWS_AS(exact_agreement("e1", {-1, -1}, "e2", {1, 2}), InvalidInputError);
  CHECK_THROWS_AS(exact_agreement("e1", {1}, "e2", {1, 2}), InvalidInputError);
}

TEST_CASE("disagreement_profile correlates dispersion with opinion features") {
  // All raters agree -> zero dispersion everywhere -> unavailable entries.
  std::vector<std::vector<int>> flat = {{3, 3, 3}, {4, 4, 4}, {2, 2, 2}, {5, 5, 5}};
  std::vector<double> feature = {0.1, 0.4, 0.2, 0.3};
  auto zero = disagreement_profile(flat, {"f"}, {feature});
  CHECK(std::isnan(zero.r[0]));

  // Dispersion tracks the feature exactly -> r = 1.
  std::vector<std::vector<int>> spread = {{3, 3}, {1, 5}, {2, 4}, {3, 3}, {1, 4}};
  std::vector<double> disp(5);
  for (int i = 0; i < 5; ++i) {
    double mean = (spread[i][0] + spread[i][1]) / 2.0;
    double ss = (spread[i][0] - mean) * (spread[i][0] - mean) +
                (spread[i][1] - mean) * (spread[i][1] - mean);
    disp[i] = std::sqrt(ss);  // sample sd with n=2
  }
  auto track = disagreement_profile(spread, {"self"}, {disp});
  CHECK(track.r[0] == doctest::Approx(1.0).epsilon(1e-12));

  // Random profile against an independent spreadsheet-style recomputation.
  Rng rng(321);
  std::vector<std::vector<int>> ratings(22);
  std::vector<double> f1(22), f2(22);
  for (int i = 0; i < 22; ++i) {
    int raters = 3 + static_cast<int>(rng.below(5));
    for (int r = 0; r < raters; ++r)
      ratings[i].push_back(1 + static_cast<int>(rng.below(5)));
    f1[i] = rng.uniform();
    f2[i] = rng.uniform();
  }
  auto profile = disagreement_profile(ratings, {"f1", "f2"}, {f1, f2});

  // Oracle: sample sd per item, then plain Pearson.
  std::vector<double> sd(22);
  for (int i = 0; i < 22; ++i) {
    double mean = 0.0;
    for (int v : ratings[i]) mean += v;
    mean /= ratings[i].size();
    double ss = 0.0;
    for (int v : ratings[i]) ss += (v - mean) * (v - mean);
    sd[i] = std::sqrt(ss / (ratings[i].size() - 1));
  }
  for (int f = 0; f < 2; ++f) {
    const auto& col = f == 0 ? f1 : f2;
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < 22; ++i) {
      mx += sd[i];
      my += col[i];
    }
    mx /= 22;
    my /= 22;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (int i = 0; i < 22; ++i) {
      sxy += (sd[i] - mx) * (col[i] - my);
      sxx += (sd[i] - mx) * (sd[i] - mx);
      syy += (col[i] - my) * (col[i] - my);
    }
    CHECK(profile.r[f] == doctest::Approx(sxy / std::sqrt(sxx * syy)).epsilon(1e-12));
  }
}
