// qacal: generate LLM-backed multiple-choice tests, ingest responses, and
// calibrate them with a mixed-format IRT model.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>

#include "qacal/analytics.hpp"
#include "qacal/calibration.hpp"
#include "qacal/dif.hpp"
#include "qacal/errors.hpp"
#include "qacal/genpipe.hpp"
#include "qacal/io.hpp"
#include "qacal/provider.hpp"
#include "qacal/scoring.hpp"
#include "qacal/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qacal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Optional config file merged under explicit flags.
struct RunConfig {
  std::string endpoint = "https://api.openai.com/v1";
  std::string model_id = "gpt-4o";
  double temperature = 0.2;
  CalibrationConfig calibration;
  DifConfig dif;
  std::uint64_t seed = 1;
};

RunConfig load_config(const std::string& path) {
  RunConfig rc;
  if (path.empty()) return rc;
  json doc = read_json_file(path);
  if (doc.contains("provider")) {
    const auto& p = doc["provider"];
    rc.endpoint = p.value("endpoint", rc.endpoint);
    rc.model_id = p.value("model", rc.model_id);
    rc.temperature = p.value("temperature", rc.temperature);
  }
  if (doc.contains("calibration")) {
    const auto& c = doc["calibration"];
    rc.calibration.n_quadrature = c.value("n_quadrature", rc.calibration.n_quadrature);
    rc.calibration.max_em_cycles = c.value("max_em_cycles", rc.calibration.max_em_cycles);
    rc.calibration.em_tolerance = c.value("em_tolerance", rc.calibration.em_tolerance);
    rc.calibration.inner_newton_max_iter =
        c.value("inner_newton_max_iter", rc.calibration.inner_newton_max_iter);
    rc.calibration.inner_newton_tolerance =
        c.value("inner_newton_tolerance", rc.calibration.inner_newton_tolerance);
    rc.calibration.slope_clamp = c.value("slope_clamp", rc.calibration.slope_clamp);
  }
  if (doc.contains("dif")) {
    const auto& d = doc["dif"];
    rc.dif.delta_flag_threshold = d.value("delta_flag_threshold", rc.dif.delta_flag_threshold);
    rc.dif.alpha = d.value("alpha", rc.dif.alpha);
  }
  rc.seed = doc.value("seed", rc.seed);
  if (rc.temperature < 0.0 || rc.temperature > 2.0)
    throw InvalidInputError("temperature must be in [0, 2]");
  return rc;
}

std::string sidecar_path(const std::string& out, const std::string& tag) {
  std::string stem = out;
  if (stem.size() > 5 && stem.substr(stem.size() - 5) == ".json")
    stem = stem.substr(0, stem.size() - 5);
  return stem + "." + tag + ".json";
}

// --- generate ----------------------------------------------------------------

int cmd_generate(const std::string& context_dir, const std::string& out,
                 const std::string& provider_kind, int n_per_snippet,
                 const std::string& fixtures, const RunConfig& rc) {
  if (!fs::is_directory(context_dir)) {
    std::cerr << "error: context dir not found: " << context_dir << "\n";
    return kExitUsage;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(context_dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<ContextSnippet> snippets;
  for (const auto& f : files) snippets.push_back({f.stem().string(), read_text_file(f.string()), ""});
  if (snippets.empty()) {
    std::cerr << "error: no snippet files in " << context_dir << "\n";
    return kExitUsage;
  }

  GenConfig gc;
  gc.model_id = rc.model_id;
  gc.temperature = rc.temperature;
  gc.n_per_snippet = n_per_snippet;

  std::unique_ptr<Provider> provider;
  if (provider_kind == "stub") {
    provider = std::make_unique<StubProvider>(fixtures, rc.seed);
    gc.model_id = "stub";
  } else if (provider_kind == "live") {
    const char* key = std::getenv("QACAL_API_KEY");
    if (key == nullptr || std::string(key).empty()) {
      std::cerr << "error: live provider needs the QACAL_API_KEY environment variable\n";
      return kExitUsage;
    }
    provider = std::make_unique<HttpProvider>(rc.endpoint, key);
  } else {
    std::cerr << "error: --provider must be live or stub\n";
    return kExitUsage;
  }

  GenerationRun run = generate_items(snippets, *provider, gc);
  ItemBank bank{std::move(run.items), std::move(run.failures)};
  write_json_file(out, bank_to_json(bank));

  std::cout << "snippets: " << snippets.size() << "\n";
  std::cout << "items generated: " << bank.items.size() << "\n";
  for (const auto& item : bank.items)
    std::cout << "  " << item.id << " <- " << item.source_snippet << "\n";
  std::cout << "failures: " << bank.failures.size() << "\n";
  for (const auto& f : bank.failures)
    std::cout << "  " << f.snippet_id << " [" << f.kind << "] " << f.detail << "\n";
  std::cout << "bank written to " << out << "\n";
  return bank.items.empty() ? kExitUsage : kExitOk;
}

// --- export-form --------------------------------------------------------------

int cmd_export_form(const std::string& bank_path, const std::string& out_form,
                    const std::string& out_key, bool force) {
  for (const std::string& path : {out_form, out_key}) {
    if (!force && fs::exists(path)) {
      std::cerr << "error: " << path << " exists; pass --force to overwrite\n";
      return kExitUsage;
    }
  }
  ItemBank bank = bank_from_json(read_json_file(bank_path));
  write_json_file(out_form, export_form(bank.items));
  write_json_file(out_key, export_answer_key(bank.items));
  std::cout << "form: " << out_form << " (" << bank.items.size() << " question blocks)\n";
  std::cout << "answer key: " << out_key << "\n";
  return kExitOk;
}

// --- ingest ---------------------------------------------------------------------

int cmd_ingest(const std::string& responses, const std::string& bank_path,
               const std::string& out) {
  std::map<std::string, int> key;
  if (!bank_path.empty()) {
    ItemBank bank = bank_from_json(read_json_file(bank_path));
    for (const auto& item : bank.items) key[item.id] = item.correct_index;
  }
  IngestResult res = ingest_responses_csv(responses, key);
  write_json_file(out, matrix_to_json(res.matrix));
  std::string opinions_path = sidecar_path(out, "opinions");
  write_json_file(opinions_path, opinions_to_json(res.opinions));
  std::cout << "persons: " << res.matrix.n_persons() << "\n";
  std::cout << "items: " << res.matrix.n_items() << "\n";
  std::cout << "option-index cells scored against the key: " << res.n_option_scored << "\n";
  std::cout << "matrix written to " << out << "\n";
  std::cout << "opinions written to " << opinions_path << "\n";
  return kExitOk;
}

// --- calibrate --------------------------------------------------------------------

int cmd_calibrate(const std::string& matrix_path, const std::string& out,
                  const std::string& report_path, std::string info_path,
                  const CalibrationConfig& config) {
  ResponseMatrix matrix = matrix_from_json(read_json_file(matrix_path));
  CalibrationResult result = fit_mixed(matrix, config);
  write_json_file(out, calibration_to_json(result));

  InformationCurve curve = test_information(result.items, default_theta_grid());
  if (info_path.empty())
    info_path = (report_path.empty() ? out : report_path) + ".info.csv";
  write_text_file(info_path, information_curve_csv(curve));

  std::string report;
  report += "# qacal calibration report\n";
  report += "# generated: " + utc_now() + "\n";
  report += "# quad-nodes: " + std::to_string(config.n_quadrature) + "\n";
  report += "# em-cycles: " + std::to_string(result.n_cycles) +
            (result.converged ? " (converged)" : " (max cycles reached)") + "\n";
  report += "# log-likelihood: " + std::to_string(result.log_likelihood) + "\n";
  report += "# se-method: cross-product approximation\n";
  report += "\n## dropped items\n";
  if (result.dropped.empty()) report += "(none)\n";
  for (const auto& d : result.dropped) report += d.id + ": " + d.reason + "\n";
  report += "\n## dichotomous (2PL) items\n" + dichotomous_table(result);
  report += "\n## graded items\n" + graded_table(result);
  report += "\n## test information\ncurve written to " + fs::path(info_path).filename().string() +
            "\n";
  if (!report_path.empty()) write_text_file(report_path, report);
  std::cout << report;
  std::cout << "params written to " << out << "\n";
  return kExitOk;
}

// --- score -----------------------------------------------------------------------

int cmd_score(const std::string& params_path, const std::string& matrix_path,
              const std::string& out) {
  CalibrationResult result = calibration_from_json(read_json_file(params_path));
  ResponseMatrix matrix = matrix_from_json(read_json_file(matrix_path));
  QuadratureGrid grid = gauss_hermite_grid(result.config.n_quadrature);
  auto abilities = eap_scores(matrix, result.items, grid);
  write_text_file(out, ability_table_csv(abilities));
  int flagged = 0;
  for (const auto& a : abilities)
    if (a.prior_only) ++flagged;
  std::cout << "scored " << abilities.size() << " persons";
  if (flagged > 0) std::cout << " (" << flagged << " with no responses, prior reported)";
  std::cout << "\nability table written to " << out << "\n";
  return kExitOk;
}

// --- dif --------------------------------------------------------------------------

int cmd_dif(const std::string& params_path, const std::string& matrix_path,
            const std::string& out, const std::string& out_table, const DifConfig& config) {
  CalibrationResult result = calibration_from_json(read_json_file(params_path));
  ResponseMatrix matrix = matrix_from_json(read_json_file(matrix_path));
  QuadratureGrid grid = gauss_hermite_grid(result.config.n_quadrature);
  DifReport report = run_dif_screen(matrix, result.items, grid, config);
  write_json_file(out, dif_report_to_json(report));
  std::string table = dif_table(report);
  if (!out_table.empty()) write_text_file(out_table, table);
  std::cout << "groups: low=" << report.n_low << " high=" << report.n_high << "\n";
  std::cout << table;
  int flagged = 0;
  for (const auto& r : report.rows)
    if (r.flagged) ++flagged;
  std::cout << "flagged items: " << flagged << "\n";
  for (const auto& s : report.skipped)
    std::cout << "skipped " << s.item << ": " << s.reason << "\n";
  std::cout << "report written to " << out << "\n";
  return kExitOk;
}

// --- analyze -----------------------------------------------------------------------

int cmd_analyze(const std::string& matrix_path, const std::string& opinions_path,
                const std::string& params_path, const std::string& out_dir,
                const std::vector<std::string>& agreement_pairs) {
  ResponseMatrix matrix = matrix_from_json(read_json_file(matrix_path));
  OpinionTable opinions;
  if (!opinions_path.empty()) opinions = opinions_from_json(read_json_file(opinions_path));
  std::vector<ItemParams> params;
  if (!params_path.empty())
    params = calibration_from_json(read_json_file(params_path)).items;

  AggregateResult agg = aggregate_items(matrix, opinions, params);
  fs::create_directories(out_dir);
  write_text_file(out_dir + "/aggregates.csv", aggregates_csv(agg.rows));

  // Fig-3-style columns over the aggregate rows.
  const std::vector<std::string> labels = {"avg_assessment", "avg_exam_score", "difficulty",
                                           "discrimination",  "is_reasonable", "is_too_easy",
                                           "is_complicated",  "is_ambiguous"};
  auto col = [&](auto getter) {
    std::vector<double> v;
    for (const auto& r : agg.rows) {
      auto opt = getter(r);
      v.push_back(opt.has_value() ? *opt : std::numeric_limits<double>::quiet_NaN());
    }
    return v;
  };
  std::vector<std::vector<double>> columns = {
      col([](const ItemAggregate& r) { return r.mean_assessment; }),
      col([](const ItemAggregate& r) { return r.mean_exam_score; }),
      col([](const ItemAggregate& r) { return r.difficulty; }),
      col([](const ItemAggregate& r) { return r.discrimination; }),
      col([](const ItemAggregate& r) { return r.prop_reasonable; }),
      col([](const ItemAggregate& r) { return r.prop_too_easy; }),
      col([](const ItemAggregate& r) { return r.prop_complicated; }),
      col([](const ItemAggregate& r) { return r.prop_ambiguous; })};
  CorrelationMatrix corr = pearson_matrix(labels, columns);
  write_json_file(out_dir + "/correlations.json", correlation_to_json(corr));
  write_text_file(out_dir + "/correlation_plot.csv", correlation_plot_csv(corr));

  // Disagreement profile: star-rating dispersion vs opinion proportions,
  // aligned on the aggregate rows.
  std::vector<std::vector<int>> ratings_per_item;
  for (const auto& r : agg.rows) {
    std::vector<int> ratings;
    for (std::size_t j = 0; j < matrix.n_items(); ++j) {
      const ItemSpec& spec = matrix.item(j);
      if (spec.kind != ItemKind::graded) continue;
      std::string suffix = spec.id.substr(spec.id.find('_') + 1);
      if (suffix != r.question) continue;
      for (std::size_t p = 0; p < matrix.n_persons(); ++p)
        if (matrix.has_response(p, j)) ratings.push_back(matrix.cell(p, j));
    }
    ratings_per_item.push_back(std::move(ratings));
  }
  DisagreementProfile profile = disagreement_profile(
      ratings_per_item, {"is_reasonable", "is_too_easy", "is_complicated", "is_ambiguous"},
      {columns[4], columns[5], columns[6], columns[7]});
  write_text_file(out_dir + "/disagreement.csv", disagreement_csv(profile));

  if (!agreement_pairs.empty()) {
    // Agreement statistic: exact star-category match over commonly rated items.
    std::string csv = "# agreement = exact star-category match proportion\n";
    csv += "rater_a,rater_b,agreement,n_items\n";
    for (const auto& pair : agreement_pairs) {
      auto comma = pair.find(',');
      if (comma == std::string::npos)
        throw InvalidInputError("--agreement-pair expects two person ids joined by a comma");
      std::string ida = pair.substr(0, comma);
      std::string idb = pair.substr(comma + 1);
      auto person_index = [&](const std::string& id) {
        for (std::size_t p = 0; p < matrix.n_persons(); ++p)
          if (matrix.person_ids()[p] == id) return p;
        throw InvalidInputError("--agreement-pair: unknown person " + id);
      };
      std::size_t pa = person_index(ida), pb = person_index(idb);
      std::vector<int> ra, rb;
      for (std::size_t j = 0; j < matrix.n_items(); ++j) {
        if (matrix.item(j).kind != ItemKind::graded) continue;
        ra.push_back(matrix.cell(pa, j));
        rb.push_back(matrix.cell(pb, j));
      }
      auto rep = exact_agreement(ida, ra, idb, rb);
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.10g", rep.percent_exact_agreement);
      csv += ida + "," + idb + "," + buf + "," + std::to_string(rep.n_items) + "\n";
      std::cout << "agreement(" << ida << ", " << idb << ") = " << buf << " over "
                << rep.n_items << " items\n";
    }
    write_text_file(out_dir + "/agreement.csv", csv);
  }

  std::cout << text_heatmap(corr);
  std::cout << "aggregates: " << agg.rows.size() << " rows";
  if (!agg.excluded.empty()) std::cout << " (" << agg.excluded.size() << " excluded)";
  std::cout << "\noutputs written to " << out_dir << "/\n";
  return kExitOk;
}

// --- simulate / study -----------------------------------------------------------------

int cmd_simulate(const std::string& spec_path, const std::string& out,
                 const std::string& out_theta) {
  SimSpec spec = simspec_from_json(read_json_file(spec_path));
  SimResult sim = simulate_responses(spec);
  write_json_file(out, matrix_to_json(sim.matrix));
  if (!out_theta.empty()) {
    std::string csv = "person_id,theta,group\n";
    for (std::size_t p = 0; p < sim.theta.size(); ++p) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.10g", sim.theta[p]);
      csv += sim.matrix.person_ids()[p] + "," + buf + "," +
             (sim.groups[p] == Group::high ? "high" : "low") + "\n";
    }
    write_text_file(out_theta, csv);
  }
  std::cout << "simulated " << sim.matrix.n_persons() << " persons x " << sim.matrix.n_items()
            << " items (seed " << spec.seed << ")\n";
  std::cout << "matrix written to " << out << "\n";
  return kExitOk;
}

int cmd_study(const std::string& spec_path, int replicates, const std::string& out,
              std::string kind, const RunConfig& rc) {
  SimSpec spec = simspec_from_json(read_json_file(spec_path));
  if (kind == "auto") kind = spec.dif_shifts.empty() ? "recovery" : "difpower";
  CalibrationConfig config = rc.calibration;
  config.seed = spec.seed;

  if (kind == "recovery") {
    RecoveryStudy study = recovery_study(spec, config, replicates);
    json per_param = json::array();
    for (const auto& row : study.per_param)
      per_param.push_back({{"item", row.item},
                           {"param", row.param},
                           {"true", row.true_value},
                           {"bias", row.bias},
                           {"rmse", row.rmse},
                           {"n", row.n}});
    json doc = {{"format", "qacal-study-recovery-v1"},
                {"replicates", study.n_replicates},
                {"failures", study.n_failures},
                {"aggregate",
                 {{"a", {{"bias", study.bias_a}, {"rmse", study.rmse_a}}},
                  {"b", {{"bias", study.bias_b}, {"rmse", study.rmse_b}}}}},
                {"per_param", per_param}};
    if (study.has_thresholds)
      doc["aggregate"]["thresholds"] = {{"bias", study.bias_threshold},
                                        {"rmse", study.rmse_threshold}};
    write_json_file(out, doc);
    std::printf("param,bias,rmse\n");
    std::printf("a,%.4f,%.4f\n", study.bias_a, study.rmse_a);
    std::printf("b,%.4f,%.4f\n", study.bias_b, study.rmse_b);
    if (study.has_thresholds)
      std::printf("thresholds,%.4f,%.4f\n", study.bias_threshold, study.rmse_threshold);
    std::printf("replicates: %d, failures: %d\n", study.n_replicates, study.n_failures);
  } else if (kind == "difpower") {
    DifPowerStudy study = dif_power_study(spec, config, rc.dif, replicates);
    json rows = json::array();
    for (std::size_t j = 0; j < study.item_ids.size(); ++j)
      rows.push_back({{"item", study.item_ids[j]},
                      {"injected_shift", study.injected_shift[j]},
                      {"flag_rate", study.flag_rate[j]},
                      {"mean_abs_delta", study.mean_abs_delta[j]},
                      {"top_rank_rate", study.top_rank_rate[j]}});
    json doc = {{"format", "qacal-study-difpower-v1"},
                {"replicates", study.n_replicates},
                {"failures", study.n_failures},
                {"detection_rate", study.detection_rate},
                {"false_flag_rate", study.false_flag_rate},
                {"items", rows}};
    write_json_file(out, doc);
    std::printf("item,injected,flag_rate,mean_abs_delta,top_rank_rate\n");
    for (std::size_t j = 0; j < study.item_ids.size(); ++j)
      std::printf("%s,%.2f,%.3f,%.3f,%.3f\n", study.item_ids[j].c_str(),
                  study.injected_shift[j], study.flag_rate[j], study.mean_abs_delta[j],
                  study.top_rank_rate[j]);
    std::printf("detection_rate: %.3f, false_flag_rate: %.3f, failures: %d\n",
                study.detection_rate, study.false_flag_rate, study.n_failures);
  } else {
    std::cerr << "error: --kind must be recovery, difpower or auto\n";
    return kExitUsage;
  }
  std::cout << "study summary written to " << out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LLM-generated test toolkit: generation, IRT calibration, DIF and analytics"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate items from context snippets");
  std::string gen_dir, gen_out, gen_provider = "stub", gen_fixtures;
  int gen_per = 1;
  std::string gen_model, gen_endpoint;
  double gen_temp = -1.0;
  std::uint64_t gen_seed = 0;
  bool gen_seed_set = false;
  gen->add_option("--context-dir", gen_dir, "Directory of snippet files")->required();
  gen->add_option("--out", gen_out, "Item bank output path")->required();
  gen->add_option("--provider", gen_provider, "live or stub")
      ->check(CLI::IsMember({"live", "stub"}));
  gen->add_option("--n-per-snippet", gen_per, "Items per snippet")->check(CLI::PositiveNumber);
  gen->add_option("--fixtures", gen_fixtures, "Stub fixture directory");
  gen->add_option("--model", gen_model, "Model id override");
  gen->add_option("--endpoint", gen_endpoint, "Chat-completion endpoint override");
  gen->add_option("--temperature", gen_temp, "Sampling temperature override");
  gen->add_option("--seed", gen_seed, "Stub synthesis seed")->each([&](const std::string&) {
    gen_seed_set = true;
  });

  // export-form
  auto* exp = app.add_subcommand("export-form", "Export form schema and answer key");
  std::string exp_bank, exp_form, exp_key;
  bool exp_force = false;
  exp->add_option("--bank", exp_bank, "Item bank path")->required();
  exp->add_option("--out-form", exp_form, "Form schema output path")->required();
  exp->add_option("--out-key", exp_key, "Answer key output path")->required();
  exp->add_flag("--force", exp_force, "Overwrite existing outputs");

  // ingest
  auto* ing = app.add_subcommand("ingest", "Ingest a response CSV into a matrix");
  std::string ing_responses, ing_bank, ing_out;
  ing->add_option("--responses", ing_responses, "Response CSV path")->required();
  ing->add_option("--bank", ing_bank, "Item bank (for the answer key)");
  ing->add_option("--out", ing_out, "Matrix output path")->required();

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Fit the mixed-format IRT model");
  std::string cal_matrix, cal_out, cal_report, cal_info;
  int cal_nodes = 0;
  std::uint64_t cal_seed = 0;
  bool cal_seed_set = false;
  cal->add_option("--matrix", cal_matrix, "Matrix path")->required();
  cal->add_option("--out", cal_out, "Params output path")->required();
  cal->add_option("--report", cal_report, "Report text output path");
  cal->add_option("--out-info", cal_info, "Information-curve CSV path");
  cal->add_option("--quad-nodes", cal_nodes, "Quadrature nodes (default 10)");
  cal->add_option("--seed", cal_seed, "Start-value jitter seed")->each([&](const std::string&) {
    cal_seed_set = true;
  });

  // score
  auto* sco = app.add_subcommand("score", "EAP ability scores");
  std::string sco_params, sco_matrix, sco_out;
  sco->add_option("--params", sco_params, "Calibrated params path")->required();
  sco->add_option("--matrix", sco_matrix, "Matrix path")->required();
  sco->add_option("--out", sco_out, "Ability table CSV path")->required();

  // dif
  auto* dif = app.add_subcommand("dif", "Uniform DIF screen");
  std::string dif_params, dif_matrix, dif_out, dif_out_table;
  double dif_delta = -1.0, dif_alpha = -1.0;
  dif->add_option("--params", dif_params, "Calibrated params path")->required();
  dif->add_option("--matrix", dif_matrix, "Matrix path")->required();
  dif->add_option("--out", dif_out, "DIF report JSON path")->required();
  dif->add_option("--out-table", dif_out_table, "DIF table CSV path");
  dif->add_option("--flag-delta", dif_delta, "|delta| flag threshold (default 0.6)");
  dif->add_option("--alpha", dif_alpha, "Wald significance level (default 0.05)");

  // analyze
  auto* ana = app.add_subcommand("analyze", "Aggregates, correlations, disagreement profile");
  std::string ana_matrix, ana_opinions, ana_params, ana_out;
  std::vector<std::string> ana_pairs;
  ana->add_option("--matrix", ana_matrix, "Matrix path")->required();
  ana->add_option("--opinions", ana_opinions, "Opinions sidecar path");
  ana->add_option("--params", ana_params, "Calibrated params path");
  ana->add_option("--out-dir", ana_out, "Output directory")->required();
  ana->add_option("--agreement-pair", ana_pairs,
                  "Two person ids joined by a comma; repeatable");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate synthetic responses");
  std::string sim_spec, sim_out, sim_theta;
  sim->add_option("--spec", sim_spec, "SimSpec JSON path")->required();
  sim->add_option("--out", sim_out, "Matrix output path")->required();
  sim->add_option("--out-theta", sim_theta, "True theta CSV path");

  // study
  auto* stu = app.add_subcommand("study", "Recovery or DIF-power study");
  std::string stu_spec, stu_out, stu_kind = "auto";
  int stu_reps = 0;
  stu->add_option("--spec", stu_spec, "SimSpec JSON path")->required();
  stu->add_option("--replicates", stu_reps, "Replicates")->required();
  stu->add_option("--out", stu_out, "Summary JSON path")->required();
  stu->add_option("--kind", stu_kind, "recovery | difpower | auto");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig rc = load_config(config_path);
    if (gen->parsed()) {
      if (!gen_model.empty()) rc.model_id = gen_model;
      if (!gen_endpoint.empty()) rc.endpoint = gen_endpoint;
      if (gen_temp >= 0.0) rc.temperature = gen_temp;
      if (gen_seed_set) rc.seed = gen_seed;
      if (rc.temperature > 2.0) throw InvalidInputError("temperature must be in [0, 2]");
      return cmd_generate(gen_dir, gen_out, gen_provider, gen_per, gen_fixtures, rc);
    }
    if (exp->parsed()) return cmd_export_form(exp_bank, exp_form, exp_key, exp_force);
    if (ing->parsed()) return cmd_ingest(ing_responses, ing_bank, ing_out);
    if (cal->parsed()) {
      CalibrationConfig config = rc.calibration;
      if (cal_nodes > 0) config.n_quadrature = cal_nodes;
      config.seed = cal_seed_set ? cal_seed : rc.seed;
      return cmd_calibrate(cal_matrix, cal_out, cal_report, cal_info, config);
    }
    if (sco->parsed()) return cmd_score(sco_params, sco_matrix, sco_out);
    if (dif->parsed()) {
      DifConfig config = rc.dif;
      if (dif_delta > 0.0) config.delta_flag_threshold = dif_delta;
      if (dif_alpha > 0.0) config.alpha = dif_alpha;
      return cmd_dif(dif_params, dif_matrix, dif_out, dif_out_table, config);
    }
    if (ana->parsed())
      return cmd_analyze(ana_matrix, ana_opinions, ana_params, ana_out, ana_pairs);
    if (sim->parsed()) return cmd_simulate(sim_spec, sim_out, sim_theta);
    if (stu->parsed()) return cmd_study(stu_spec, stu_reps, stu_out, stu_kind, rc);
    std::cerr << "error: no subcommand\n";
    return kExitUsage;
  } catch (const InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InsufficientDataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NumericalFailureError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ProviderError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
