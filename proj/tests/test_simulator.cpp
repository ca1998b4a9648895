#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "qacal/errors.hpp"
#include "qacal/model.hpp"
#include "qacal/simulator.hpp"
#include "qacal/stats.hpp"

using namespace qacal;
using test::basic_spec;
using test::dich;
using test::graded;

TEST_CASE("simulate_responses is seed-deterministic") {
  auto spec = basic_spec(test::spread_2pl_bank(6, 0.5, 2.0, -1.5, 1.5), 100, 12345);
  auto a = simulate_responses(spec);
  auto b = simulate_responses(spec);
  REQUIRE(a.matrix.n_persons() == b.matrix.n_persons());
  for (std::size_t p = 0; p < a.matrix.n_persons(); ++p) {
    CHECK(a.theta[p] == b.theta[p]);
    for (std::size_t j = 0; j < a.matrix.n_items(); ++j)
      CHECK(a.matrix.cell(p, j) == b.matrix.cell(p, j));
  }
  spec.seed = 54321;
  auto c = simulate_responses(spec);
  int diff = 0;
  for (std::size_t p = 0; p < a.matrix.n_persons(); ++p)
    for (std::size_t j = 0; j < a.matrix.n_items(); ++j)
      if (a.matrix.cell(p, j) != c.matrix.cell(p, j)) ++diff;
  CHECK(diff > 0);
}

TEST_CASE("seed is mandatory and the spec is validated") {
  SimSpec spec;
  spec.items = {dich("i", 1.0, 0.0)};
  spec.n_persons = 10;
  CHECK_THROWS_AS(simulate_responses(spec), InvalidInputError);
  spec.seed_set = true;
  spec.n_persons = 0;
  CHECK_THROWS_AS(simulate_responses(spec), InvalidInputError);
  spec.n_persons = 10;
  spec.items.clear();
  CHECK_THROWS_AS(simulate_responses(spec), InvalidInputError);
}

TEST_CASE("flat items hit logistic(d) regardless of theta") {
  SimSpec spec = basic_spec({{"flat", Dichotomous2PL::from_ad(0.0, 0.7)}}, 4000, 777);
  auto sim = simulate_responses(spec);
  double correct = 0.0;
  for (std::size_t p = 0; p < sim.matrix.n_persons(); ++p) correct += sim.matrix.cell(p, 0);
  double prop = correct / 4000.0;
  double expect = logistic(0.7);
  double se = std::sqrt(expect * (1.0 - expect) / 4000.0);
  CHECK(std::fabs(prop - expect) < 3.0 * se);
}

TEST_CASE("easy steep item is answered correctly almost always") {
  SimSpec spec = basic_spec({dich("easy", 2.0, -3.0)}, 1000, 31);
  auto sim = simulate_responses(spec);
  double correct = 0.0;
  for (std::size_t p = 0; p < 1000; ++p) correct += sim.matrix.cell(p, 0);
  CHECK(correct / 1000.0 > 0.9);
}

TEST_CASE("empirical frequencies track model probabilities in theta bins") {
  SimSpec spec = basic_spec(
      {dich("d1", 1.4, 0.2), graded("g1", 1.1, {-1.2, -0.2, 0.9}, 4)}, 8000, 2718);
  auto sim = simulate_responses(spec);

  // Bin persons by true theta; compare observed vs model at the bin mean.
  const double edges[4] = {-1.5, -0.5, 0.5, 1.5};
  for (int b = 0; b < 3; ++b) {
    std::vector<std::size_t> members;
    double theta_sum = 0.0;
    for (std::size_t p = 0; p < sim.theta.size(); ++p) {
      if (sim.theta[p] >= edges[b] && sim.theta[p] < edges[b + 1]) {
        members.push_back(p);
        theta_sum += sim.theta[p];
      }
    }
    REQUIRE(members.size() >= 200);
    double theta_mid = theta_sum / members.size();

    double correct = 0.0;
    for (std::size_t p : members) correct += sim.matrix.cell(p, 0);
    double prop = correct / members.size();
    double model_p = icc_2pl(theta_mid, spec.items[0].dich());
    double se = std::sqrt(model_p * (1.0 - model_p) / members.size());
    CHECK(std::fabs(prop - model_p) < 3.0 * se + 0.01);  // small slack for binning width

    auto probs = grm_category_probs(theta_mid, spec.items[1].graded());
    for (int cat = 1; cat <= 4; ++cat) {
      double count = 0.0;
      for (std::size_t p : members) count += sim.matrix.cell(p, 1) == cat ? 1.0 : 0.0;
      double cat_prop = count / members.size();
      double cat_se = std::sqrt(probs[cat - 1] * (1.0 - probs[cat - 1]) / members.size());
      CHECK(std::fabs(cat_prop - probs[cat - 1]) < 3.0 * cat_se + 0.015);
    }
  }
}

TEST_CASE("groups split by person index and dif shifts only the high group") {
  SimSpec spec = basic_spec({dich("biased", 1.0, 0.0)}, 20000, 999);
  spec.dif_shifts["biased"] = 1.5;
  auto sim = simulate_responses(spec);
  for (int p = 0; p < 10000; ++p) CHECK(sim.groups[p] == Group::low);
  for (int p = 10000; p < 20000; ++p) CHECK(sim.groups[p] == Group::high);

  // Matched-theta comparison: restrict to |theta| < 0.25 where the curves
  // are well separated only through the injected shift.
  double low_c = 0, low_n = 0, high_c = 0, high_n = 0;
  for (std::size_t p = 0; p < sim.theta.size(); ++p) {
    if (std::fabs(sim.theta[p]) > 0.25) continue;
    if (sim.groups[p] == Group::low) {
      low_n += 1;
      low_c += sim.matrix.cell(p, 0);
    } else {
      high_n += 1;
      high_c += sim.matrix.cell(p, 0);
    }
  }
  REQUIRE(low_n > 200);
  REQUIRE(high_n > 200);
  double odds_low = (low_c / low_n) / (1.0 - low_c / low_n);
  double odds_high = (high_c / high_n) / (1.0 - high_c / high_n);
  CHECK(std::log(odds_high / odds_low) == doctest::Approx(1.5).epsilon(0.25));
}

TEST_CASE("theta group shift moves the high group mean") {
  SimSpec spec = basic_spec({dich("i", 1.0, 0.0)}, 6000, 41);
  spec.group_theta_shift = 0.8;
  auto sim = simulate_responses(spec);
  double low_sum = 0, high_sum = 0;
  for (int p = 0; p < 3000; ++p) low_sum += sim.theta[p];
  for (int p = 3000; p < 6000; ++p) high_sum += sim.theta[p];
  CHECK(std::fabs(low_sum / 3000.0) < 0.1);
  CHECK(high_sum / 3000.0 == doctest::Approx(0.8).epsilon(0.1));
}

TEST_CASE("recovery_study aggregates bias and rmse") {
  auto spec = basic_spec(test::spread_2pl_bank(12, 0.6, 1.8, -1.5, 1.5), 300, 5150);
  CalibrationConfig config;
  auto study = recovery_study(spec, config, 3);
  CHECK(study.n_replicates == 3);
  CHECK(study.n_failures == 0);
  CHECK(study.rmse_a < 0.4);  // loose bound at N=300, 3 replicates
  CHECK(study.rmse_b < 0.4);
  CHECK(study.per_param.size() == 24);  // a and b per item
  for (const auto& row : study.per_param) {
    CHECK(row.n == 3);
    CHECK(row.rmse >= std::fabs(row.bias) - 1e-12);
  }
  CHECK_THROWS_AS(recovery_study(spec, config, 0), InvalidInputError);
}

TEST_CASE("recovery_study stays finite in the small-sample regime") {
  // N=50 with 25 modest-discrimination items: errors are large but the study
  // must complete and report finite figures.
  auto spec = test::basic_spec(test::spread_2pl_bank(25, 0.5, 2.0, -1.5, 1.5), 50, 777001);
  CalibrationConfig config;
  auto study = recovery_study(spec, config, 3);
  CHECK(study.n_failures == 0);
  CHECK(std::isfinite(study.rmse_a));
  CHECK(std::isfinite(study.rmse_b));
  CHECK(study.rmse_a > 0.0);
  CHECK(study.rmse_b > 0.0);
  for (const auto& row : study.per_param) CHECK(std::isfinite(row.rmse));
}

TEST_CASE("recovery_study covers graded thresholds") {
  std::vector<ItemParams> items = test::spread_2pl_bank(6, 0.8, 1.6, -1.0, 1.0);
  for (int j = 0; j < 6; ++j)
    items.push_back(graded("assess_" + std::to_string(j + 1), 1.0 + 0.1 * j,
                           {-1.5 + 0.05 * j, -0.3 + 0.05 * j, 0.9 + 0.05 * j}, 4));
  auto spec = basic_spec(items, 400, 8675309);
  CalibrationConfig config;
  auto study = recovery_study(spec, config, 2);
  CHECK(study.has_thresholds);
  CHECK(study.rmse_threshold < 0.5);
  CHECK(study.n_failures == 0);
}

TEST_CASE("recovery_study aborts when most replicates cannot fit") {
  // A single person per replicate cannot support a fit, so every replicate
  // fails and the 20% failure ceiling trips.
  auto spec = test::basic_spec(test::spread_2pl_bank(5, 0.8, 1.5, -1.0, 1.0), 1, 31337);
  CalibrationConfig config;
  CHECK_THROWS_AS(recovery_study(spec, config, 5), NumericalFailureError);
}

TEST_CASE("dif_power_study flags the injected item and ranks it first") {
  auto spec = basic_spec(test::spread_2pl_bank(10, 0.8, 1.8, -1.2, 1.2), 500, 112233);
  spec.dif_shifts["exam_3"] = 1.0;
  CalibrationConfig config;
  DifConfig dif_config;
  auto study = dif_power_study(spec, config, dif_config, 20);
  CHECK(study.n_failures == 0);
  CHECK(study.detection_rate >= 0.8);
  CHECK(study.false_flag_rate <= 0.1);
  for (std::size_t j = 0; j < study.item_ids.size(); ++j) {
    if (study.item_ids[j] == "exam_3") {
      CHECK(study.injected_shift[j] == 1.0);
      CHECK(study.top_rank_rate[j] >= 0.9);
      CHECK(study.mean_abs_delta[j] > 0.5);
    }
  }
  CHECK_THROWS_AS(dif_power_study(spec, config, dif_config, 0), InvalidInputError);
}
