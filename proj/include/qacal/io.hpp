#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "qacal/analytics.hpp"
#include "qacal/calibration.hpp"
#include "qacal/dif.hpp"
#include "qacal/genpipe.hpp"
#include "qacal/scoring.hpp"
#include "qacal/simulator.hpp"

namespace qacal {

// On-disk formats. JSON documents carry a "format" tag; all writers are
// deterministic (sorted keys, shortest-round-trip floats, no timestamps
// outside report headers).

// --- generic helpers -------------------------------------------------------
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc);

// Minimal CSV with quoting support for commas/quotes/newlines.
std::vector<std::vector<std::string>> read_csv(const std::string& path);
std::string csv_escape(const std::string& field);

// --- item bank (qacal-bank-v1) ---------------------------------------------
struct ItemBank {
  std::vector<GeneratedItem> items;
  std::vector<GenerationFailure> failures;
};
nlohmann::json bank_to_json(const ItemBank& bank);
ItemBank bank_from_json(const nlohmann::json& doc);

// --- answer key (qacal-key-v1) ---------------------------------------------
std::map<std::string, int> key_from_json(const nlohmann::json& doc);

// --- response matrix (qacal-matrix-v1) --------------------------------------
nlohmann::json matrix_to_json(const ResponseMatrix& matrix);
ResponseMatrix matrix_from_json(const nlohmann::json& doc);

// --- opinions sidecar (qacal-opinions-v1) ------------------------------------
nlohmann::json opinions_to_json(const OpinionTable& opinions);
OpinionTable opinions_from_json(const nlohmann::json& doc);

// --- calibration result (qacal-params-v1) ------------------------------------
nlohmann::json calibration_to_json(const CalibrationResult& result);
CalibrationResult calibration_from_json(const nlohmann::json& doc);

// --- DIF report (qacal-dif-v1) ------------------------------------------------
nlohmann::json dif_report_to_json(const DifReport& report);

// --- simulation spec (qacal-simspec-v1) ---------------------------------------
SimSpec simspec_from_json(const nlohmann::json& doc);
nlohmann::json simspec_to_json(const SimSpec& spec);

// --- CSV ingestion -----------------------------------------------------------
// Header: person_id, then exam_* (0/1 or chosen option index scored against
// the key), assess_* (1..5), opinion_* (one of the four choices), comment_*,
// alternative_*. Blank cells are absent.
struct IngestResult {
  ResponseMatrix matrix;
  OpinionTable opinions;
  int n_option_scored = 0;  // exam cells scored through the answer key
};
IngestResult ingest_responses_csv(const std::string& csv_path,
                                  const std::map<std::string, int>& answer_key);

// --- tabular emitters ---------------------------------------------------------
std::string ability_table_csv(const std::vector<AbilityEstimate>& abilities);
std::string information_curve_csv(const InformationCurve& curve);
std::string aggregates_csv(const std::vector<ItemAggregate>& rows);
std::string correlation_plot_csv(const CorrelationMatrix& matrix);
nlohmann::json correlation_to_json(const CorrelationMatrix& matrix);
std::string disagreement_csv(const DisagreementProfile& profile);

// Fixed-width report tables in the published layouts: dichotomous items as
// (item, a, b), graded items as (item, a, b1..b4) with blanks for collapsed
// thresholds, DIF rows as (item, delta_log_odds, p_value, flagged, separation).
std::string dichotomous_table(const CalibrationResult& result);
std::string graded_table(const CalibrationResult& result);
std::string dif_table(const DifReport& report);

// Text heatmap of a correlation matrix for terminal display.
std::string text_heatmap(const CorrelationMatrix& matrix);

}  // namespace qacal
