#include "qacal/simulator.hpp"

#include <cmath>

#include "qacal/errors.hpp"
#include "qacal/rng.hpp"
#include "qacal/stats.hpp"

namespace qacal {

namespace {

void validate_spec(const SimSpec& spec) {
  if (!spec.seed_set) throw InvalidInputError("simulate: seed is mandatory");
  if (spec.n_persons < 1) throw InvalidInputError("simulate: n_persons must be >= 1");
  if (spec.items.empty()) throw InvalidInputError("simulate: no items");
  if (!(spec.theta_sd > 0.0)) throw InvalidInputError("simulate: theta_sd must be positive");
  for (const auto& item : spec.items)
    if (!item.is_dichotomous()) item.graded().validate();
}

int draw_graded(const GradedParams& g, double theta, double shift, Rng& rng) {
  // Draw from cumulative curves with the uniform shift applied on the logit.
  double u = rng.uniform();
  int cat = 1;
  for (std::size_t j = 0; j < g.thresholds.size(); ++j) {
    double p_ge = logistic(g.a * (theta - g.thresholds[j]) + shift);
    if (u < p_ge)
      cat = static_cast<int>(j) + 2;
    else
      break;
  }
  return cat;
}

}  // namespace

SimResult simulate_responses(const SimSpec& spec) {
  validate_spec(spec);
  const int np = spec.n_persons;

  std::vector<std::string> person_ids(np);
  std::vector<Group> groups(np);
  for (int p = 0; p < np; ++p) {
    person_ids[p] = "p" + std::to_string(p + 1);
    groups[p] = p < np / 2 ? Group::low : Group::high;
  }

  std::vector<ItemSpec> item_specs;
  item_specs.reserve(spec.items.size());
  for (const auto& item : spec.items) {
    if (item.is_dichotomous()) {
      item_specs.push_back({item.id, ItemKind::dichotomous, 2});
    } else {
      item_specs.push_back({item.id, ItemKind::graded, item.graded().n_declared() > 0
                                                           ? item.graded().n_declared()
                                                           : item.graded().n_modeled()});
    }
  }

  SimResult result{ResponseMatrix(person_ids, item_specs), std::vector<double>(np),
                   std::move(groups)};

  Rng theta_rng(derive_seed(spec.seed, 0));
  for (int p = 0; p < np; ++p) {
    double mean = spec.theta_mean;
    if (result.groups[p] == Group::high) mean += spec.group_theta_shift;
    result.theta[p] = mean + spec.theta_sd * theta_rng.normal();
  }

  for (std::size_t j = 0; j < spec.items.size(); ++j) {
    const ItemParams& item = spec.items[j];
    auto shift_it = spec.dif_shifts.find(item.id);
    double dif = shift_it == spec.dif_shifts.end() ? 0.0 : shift_it->second;
    Rng rng(derive_seed(spec.seed, j + 1));
    for (int p = 0; p < np; ++p) {
      double shift = result.groups[p] == Group::high ? dif : 0.0;
      if (item.is_dichotomous()) {
        double prob = logistic(item.dich().a * result.theta[p] + item.dich().d + shift);
        result.matrix.set_cell(p, j, rng.uniform() < prob ? 1 : 0);
      } else {
        // Simulated graded responses are emitted on the modeled scale.
        int cat = draw_graded(item.graded(), result.theta[p], shift, rng);
        result.matrix.set_cell(p, j, cat);
      }
    }
  }
  return result;
}

RecoveryStudy recovery_study(const SimSpec& spec, const CalibrationConfig& config,
                             int n_replicates) {
  if (n_replicates < 1) throw InvalidInputError("recovery_study: need at least 1 replicate");
  validate_spec(spec);

  RecoveryStudy study;
  study.n_replicates = n_replicates;

  // Accumulators per (item, parameter).
  struct Acc {
    std::string item, param;
    double true_value = 0.0;
    double sum_err = 0.0, sum_sq = 0.0;
    int n = 0;
  };
  std::vector<Acc> accs;
  for (const auto& item : spec.items) {
    if (item.is_dichotomous()) {
      accs.push_back({item.id, "a", item.dich().a});
      if (item.dich().b.has_value()) accs.push_back({item.id, "b", *item.dich().b});
    } else {
      accs.push_back({item.id, "a", item.graded().a});
      for (std::size_t t = 0; t < item.graded().thresholds.size(); ++t)
        accs.push_back({item.id, "b" + std::to_string(t + 1), item.graded().thresholds[t]});
    }
  }

  for (int rep = 0; rep < n_replicates; ++rep) {
    SimSpec rep_spec = spec;
    rep_spec.seed = derive_seed(spec.seed, 1000003ULL * (rep + 1));
    CalibrationResult fit;
    try {
      SimResult sim = simulate_responses(rep_spec);
      CalibrationConfig rep_config = config;
      rep_config.seed = rep_spec.seed;
      fit = fit_mixed(sim.matrix, rep_config);
    } catch (const std::exception& e) {
      ++study.n_failures;
      study.failure_messages.push_back("replicate " + std::to_string(rep + 1) + ": " + e.what());
      continue;
    }
    for (auto& acc : accs) {
      for (const auto& est : fit.items) {
        if (est.id != acc.item) continue;
        double value;
        if (acc.param == "a") {
          value = est.discrimination();
        } else if (est.is_dichotomous()) {
          if (!est.dich().b.has_value()) break;  // unstable; skip this draw
          value = *est.dich().b;
        } else {
          std::size_t t = static_cast<std::size_t>(std::stoi(acc.param.substr(1))) - 1;
          if (t >= est.graded().thresholds.size()) break;
          value = est.graded().thresholds[t];
        }
        acc.sum_err += value - acc.true_value;
        acc.sum_sq += (value - acc.true_value) * (value - acc.true_value);
        acc.n += 1;
        break;
      }
    }
  }

  if (study.n_failures * 5 > n_replicates)
    throw NumericalFailureError("recovery_study: more than 20% of replicates failed (" +
                                std::to_string(study.n_failures) + "/" +
                                std::to_string(n_replicates) + ")");

  double sq_a = 0.0, sq_b = 0.0, sq_t = 0.0;
  double sum_a = 0.0, sum_b = 0.0, sum_t = 0.0;
  int n_a = 0, n_b = 0, n_t = 0;
  for (const auto& acc : accs) {
    RecoveryRow row;
    row.item = acc.item;
    row.param = acc.param;
    row.true_value = acc.true_value;
    row.n = acc.n;
    if (acc.n > 0) {
      row.bias = acc.sum_err / acc.n;
      row.rmse = std::sqrt(acc.sum_sq / acc.n);
    }
    study.per_param.push_back(row);
    if (acc.param == "a") {
      sq_a += acc.sum_sq;
      sum_a += acc.sum_err;
      n_a += acc.n;
    } else if (acc.param == "b") {
      sq_b += acc.sum_sq;
      sum_b += acc.sum_err;
      n_b += acc.n;
    } else {
      sq_t += acc.sum_sq;
      sum_t += acc.sum_err;
      n_t += acc.n;
    }
  }
  if (n_a > 0) {
    study.bias_a = sum_a / n_a;
    study.rmse_a = std::sqrt(sq_a / n_a);
  }
  if (n_b > 0) {
    study.bias_b = sum_b / n_b;
    study.rmse_b = std::sqrt(sq_b / n_b);
  }
  if (n_t > 0) {
    study.has_thresholds = true;
    study.bias_threshold = sum_t / n_t;
    study.rmse_threshold = std::sqrt(sq_t / n_t);
  }
  return study;
}

DifPowerStudy dif_power_study(const SimSpec& spec, const CalibrationConfig& config,
                              const DifConfig& dif_config, int n_replicates) {
  if (n_replicates < 1) throw InvalidInputError("dif_power_study: need at least 1 replicate");
  validate_spec(spec);

  DifPowerStudy study;
  study.n_replicates = n_replicates;
  for (const auto& item : spec.items) {
    study.item_ids.push_back(item.id);
    auto it = spec.dif_shifts.find(item.id);
    study.injected_shift.push_back(it == spec.dif_shifts.end() ? 0.0 : it->second);
  }
  std::vector<int> flag_count(spec.items.size(), 0);
  std::vector<int> top_count(spec.items.size(), 0);
  std::vector<double> abs_delta_sum(spec.items.size(), 0.0);
  std::vector<int> tested_count(spec.items.size(), 0);

  for (int rep = 0; rep < n_replicates; ++rep) {
    SimSpec rep_spec = spec;
    rep_spec.seed = derive_seed(spec.seed, 7000003ULL * (rep + 1));
    try {
      SimResult sim = simulate_responses(rep_spec);
      CalibrationConfig rep_config = config;
      rep_config.seed = rep_spec.seed;
      CalibrationResult fit = fit_mixed(sim.matrix, rep_config);
      QuadratureGrid grid = gauss_hermite_grid(rep_config.n_quadrature);
      // Screen against the true injection groups; a median split on estimated
      // ability is independent of the index-based injection and would wash
      // the injected shift out of both groups.
      DifConfig screen_config = dif_config;
      screen_config.grouping = DifGrouping::external;
      DifReport report = run_dif_screen(sim.matrix, fit.items, grid, screen_config, &sim.groups);
      double best = -1.0;
      std::string best_item;
      for (const auto& row : report.rows) {
        if (std::fabs(row.delta_log_odds) > best) {
          best = std::fabs(row.delta_log_odds);
          best_item = row.item;
        }
        for (std::size_t j = 0; j < study.item_ids.size(); ++j) {
          if (study.item_ids[j] != row.item) continue;
          ++tested_count[j];
          abs_delta_sum[j] += std::fabs(row.delta_log_odds);
          if (row.flagged) ++flag_count[j];
          break;
        }
      }
      for (std::size_t j = 0; j < study.item_ids.size(); ++j)
        if (study.item_ids[j] == best_item) ++top_count[j];
    } catch (const std::exception& e) {
      ++study.n_failures;
      continue;
    }
  }

  if (study.n_failures * 5 > n_replicates)
    throw NumericalFailureError("dif_power_study: more than 20% of replicates failed");

  double det_sum = 0.0;
  int det_n = 0;
  double false_sum = 0.0;
  int false_n = 0;
  for (std::size_t j = 0; j < study.item_ids.size(); ++j) {
    double rate = tested_count[j] > 0 ? static_cast<double>(flag_count[j]) / tested_count[j] : 0.0;
    study.flag_rate.push_back(rate);
    study.mean_abs_delta.push_back(tested_count[j] > 0 ? abs_delta_sum[j] / tested_count[j] : 0.0);
    study.top_rank_rate.push_back(
        tested_count[j] > 0 ? static_cast<double>(top_count[j]) / tested_count[j] : 0.0);
    if (study.injected_shift[j] != 0.0) {
      det_sum += rate;
      ++det_n;
    } else if (tested_count[j] > 0) {
      false_sum += rate;
      ++false_n;
    }
  }
  study.detection_rate = det_n > 0 ? det_sum / det_n : 0.0;
  study.false_flag_rate = false_n > 0 ? false_sum / false_n : 0.0;
  return study;
}

}  // namespace qacal
