#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "qacal/dif.hpp"
#include "qacal/errors.hpp"
#include "qacal/rng.hpp"
#include "qacal/stats.hpp"

using namespace qacal;

namespace {

std::vector<AbilityEstimate> abilities_from(const std::vector<double>& theta) {
  std::vector<AbilityEstimate> out;
  for (std::size_t i = 0; i < theta.size(); ++i)
    out.push_back({"p" + std::to_string(i), theta[i], 0.5, 10, false});
  return out;
}

struct SimDif {
  std::vector<int> responses;
  std::vector<double> theta;
  std::vector<Group> groups;
};

// Logistic responses at true theta with a uniform shift for the high group.
SimDif simulate_dif(int n, double a, double b, double shift, std::uint64_t seed) {
  SimDif s;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    double theta = rng.normal();
    Group g = i < n / 2 ? Group::low : Group::high;
    double logit = a * (theta - b) + (g == Group::high ? shift : 0.0);
    s.theta.push_back(theta);
    s.groups.push_back(g);
    s.responses.push_back(rng.uniform() < logistic(logit) ? 1 : 0);
  }
  return s;
}

}  // namespace

TEST_CASE("median_split basics and tie rule") {
  auto g = median_split(abilities_from({-1.0, 0.0, 1.0, 2.0}));
  CHECK(g == std::vector<Group>{Group::low, Group::low, Group::high, Group::high});

  auto tie = median_split(abilities_from({0.0, 0.0, 0.0, 1.0}));
  CHECK(tie == std::vector<Group>{Group::low, Group::low, Group::low, Group::high});

  CHECK_THROWS_AS(median_split(abilities_from({0.0, 1.0, 2.0})), InvalidInputError);
  CHECK_THROWS_AS(median_split(abilities_from({1.0, 1.0, 1.0, 1.0})), InvalidInputError);
}

TEST_CASE("median_split group sizes differ only by median ties") {
  Rng rng(2025);
  std::vector<double> theta(45);
  for (auto& t : theta) t = rng.normal();
  auto groups = median_split(abilities_from(theta));
  int n_high = 0;
  for (Group g : groups)
    if (g == Group::high) ++n_high;
  int n_low = 45 - n_high;
  // Continuous draws: sizes split 23/22 around the middle order statistic.
  CHECK(std::abs(n_high - n_low) <= 1);
}

TEST_CASE("uniform_dif under the null keeps the false-flag rate low") {
  DifConfig config;
  int flags = 0;
  const int reps = 100;
  for (int rep = 0; rep < reps; ++rep) {
    auto s = simulate_dif(500, 1.2, 0.0, 0.0, 9000 + rep);
    auto row = uniform_dif("item", s.responses, s.theta, s.groups, config);
    if (row.flagged) ++flags;
    CHECK(row.wald_p_value >= 0.0);
    CHECK(row.wald_p_value <= 1.0);
  }
  CHECK(flags <= 10);
}

TEST_CASE("uniform_dif detects a one-logit uniform shift") {
  DifConfig config;
  int flags = 0;
  double delta_sum = 0.0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    auto s = simulate_dif(500, 1.2, 0.2, 1.0, 31000 + rep);
    auto row = uniform_dif("item", s.responses, s.theta, s.groups, config);
    if (row.flagged) ++flags;
    delta_sum += row.delta_log_odds;
  }
  CHECK(flags >= 45);  // >= 90% power in this regime
  CHECK(std::fabs(delta_sum / reps - 1.0) < 0.3);
}

TEST_CASE("uniform_dif rejects zero-variance items") {
  std::vector<int> resp(20, 1);
  std::vector<double> theta(20, 0.0);
  std::vector<Group> groups(20, Group::low);
  for (int i = 10; i < 20; ++i) groups[i] = Group::high;
  for (int i = 0; i < 20; ++i) theta[i] = i * 0.1;
  CHECK_THROWS_AS(uniform_dif("const", resp, theta, groups, DifConfig{}), InvalidInputError);
}

TEST_CASE("group relabeling negates delta exactly and keeps p") {
  auto s = simulate_dif(300, 1.0, 0.0, 0.7, 777);
  DifConfig config;
  auto row = uniform_dif("item", s.responses, s.theta, s.groups, config);
  std::vector<Group> swapped;
  for (Group g : s.groups) swapped.push_back(g == Group::high ? Group::low : Group::high);
  auto row2 = uniform_dif("item", s.responses, s.theta, swapped, config);
  CHECK(row2.delta_log_odds == -row.delta_log_odds);  // exact, not approximate
  CHECK(row2.wald_p_value == row.wald_p_value);
  CHECK(row2.flagged == row.flagged);
}

TEST_CASE("theta shift is absorbed by the intercept") {
  auto s = simulate_dif(400, 1.3, -0.2, 0.5, 4242);
  DifConfig config;
  auto base = uniform_dif("item", s.responses, s.theta, s.groups, config);
  std::vector<double> shifted = s.theta;
  for (double& t : shifted) t += 2.5;
  auto moved = uniform_dif("item", s.responses, shifted, s.groups, config);
  CHECK(std::fabs(moved.delta_log_odds - base.delta_log_odds) < 1e-8);
  CHECK(std::fabs(moved.wald_p_value - base.wald_p_value) < 1e-8);
}

TEST_CASE("null model likelihood equals a plain logistic fit on theta") {
  auto s = simulate_dif(250, 1.1, 0.3, 0.4, 555);
  DifConfig config;
  auto row = uniform_dif("item", s.responses, s.theta, s.groups, config);

  std::vector<double> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < s.responses.size(); ++i) {
    x.push_back(1.0);
    x.push_back(s.theta[i]);
    y.push_back(s.responses[i]);
  }
  auto plain = logistic_newton(x, y, 2);
  CHECK(row.null_log_lik == doctest::Approx(plain.log_lik).epsilon(1e-10));
  CHECK(row.log_lik >= row.null_log_lik - 1e-10);  // nesting
}

TEST_CASE("separation is detected and still reported") {
  // Response exactly equals the group indicator: complete separation on it.
  std::vector<int> resp;
  std::vector<double> theta;
  std::vector<Group> groups;
  Rng rng(99);
  for (int i = 0; i < 60; ++i) {
    Group g = i < 30 ? Group::low : Group::high;
    groups.push_back(g);
    theta.push_back(rng.normal());
    resp.push_back(g == Group::high ? 1 : 0);
  }
  auto row = uniform_dif("sep", resp, theta, groups, DifConfig{});
  CHECK(row.separation_detected);
  CHECK(std::fabs(row.delta_log_odds) > 15.0);
  CHECK(std::isfinite(row.delta_log_odds));
  CHECK(row.wald_p_value >= 0.0);
}

TEST_CASE("run_dif_screen sorts by |delta| and reports groups") {
  // Simulated mixed data with one strongly shifted item. The injection
  // follows person index, so screening uses the matching external labels.
  SimSpec spec = test::basic_spec(test::spread_2pl_bank(12, 0.8, 1.8, -1.0, 1.0), 400, 606);
  spec.dif_shifts["exam_5"] = 1.2;
  auto sim = simulate_responses(spec);
  CalibrationConfig config;
  auto fit = fit_mixed(sim.matrix, config);
  auto grid = gauss_hermite_grid(config.n_quadrature);

  DifConfig ext_config;
  ext_config.grouping = DifGrouping::external;
  auto report = run_dif_screen(sim.matrix, fit.items, grid, ext_config, &sim.groups);

  REQUIRE(!report.rows.empty());
  CHECK(report.n_low == 200);
  CHECK(report.n_high == 200);
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    CHECK(std::fabs(report.rows[i - 1].delta_log_odds) >=
          std::fabs(report.rows[i].delta_log_odds));
  CHECK(report.rows.front().item == "exam_5");
  CHECK(report.rows.front().flagged);

  CHECK_THROWS_AS(run_dif_screen(sim.matrix, fit.items, grid, ext_config, nullptr),
                  InvalidInputError);

  // Median-split grouping over estimated abilities also runs end to end.
  DifConfig med_config;
  auto med = run_dif_screen(sim.matrix, fit.items, grid, med_config);
  CHECK(med.n_low + med.n_high == 400);
  CHECK(med.n_low > 0);
  CHECK(med.n_high > 0);
  CHECK(med.rows.size() == report.rows.size());
}
