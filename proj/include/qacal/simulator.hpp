#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qacal/calibration.hpp"
#include "qacal/dif.hpp"
#include "qacal/item_params.hpp"
#include "qacal/response_matrix.hpp"

namespace qacal {

// Generating model for synthetic response data. Groups for DIF injection are
// assigned by person index (first half low, second half high) before theta is
// drawn, so injected DIF stays uniform.
struct SimSpec {
  int n_persons = 0;
  std::vector<ItemParams> items;
  double theta_mean = 0.0;
  double theta_sd = 1.0;
  double group_theta_shift = 0.0;            // extra theta mean for the high group
  std::map<std::string, double> dif_shifts;  // item id -> logit shift for the high group
  std::uint64_t seed = 0;
  bool seed_set = false;
};

struct SimResult {
  ResponseMatrix matrix;
  std::vector<double> theta;
  std::vector<Group> groups;
};

SimResult simulate_responses(const SimSpec& spec);

struct RecoveryRow {
  std::string item;
  std::string param;  // "a", "b", "b1".."b4"
  double true_value = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  int n = 0;
};

struct RecoveryStudy {
  int n_replicates = 0;
  int n_failures = 0;
  std::vector<RecoveryRow> per_param;
  double bias_a = 0.0, rmse_a = 0.0;
  double bias_b = 0.0, rmse_b = 0.0;
  double bias_threshold = 0.0, rmse_threshold = 0.0;
  bool has_thresholds = false;
  std::vector<std::string> failure_messages;
};

// Simulate -> fit -> compare, n_replicates times. Throws InvalidInputError on
// zero replicates and NumericalFailureError when more than 20% of replicates
// fail to fit.
RecoveryStudy recovery_study(const SimSpec& spec, const CalibrationConfig& config,
                             int n_replicates);

struct DifPowerStudy {
  int n_replicates = 0;
  int n_failures = 0;
  std::vector<std::string> item_ids;
  std::vector<double> injected_shift;
  std::vector<double> flag_rate;
  std::vector<double> mean_abs_delta;
  std::vector<double> top_rank_rate;  // fraction of replicates with the max |delta|
  double detection_rate = 0.0;        // over injected items
  double false_flag_rate = 0.0;       // over clean items
};

// Full pipeline per replicate: simulate -> calibrate -> DIF screen.
DifPowerStudy dif_power_study(const SimSpec& spec, const CalibrationConfig& config,
                              const DifConfig& dif_config, int n_replicates);

}  // namespace qacal
