#include "qacal/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qacal/errors.hpp"

namespace qacal {

using nlohmann::json;

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string num10(double v) { return std::isnan(v) ? "" : fmt("%.10g", v); }

json opt_to_json(const std::optional<double>& v) {
  return v.has_value() ? json(*v) : json(nullptr);
}

void expect_format(const json& doc, const std::string& tag) {
  if (!doc.is_object() || !doc.contains("format") || doc["format"] != tag)
    throw InvalidInputError("expected a " + tag + " document");
}

}  // namespace

// --- generic helpers --------------------------------------------------------

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot read file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot write file: " + path);
  out << content;
  if (!out) throw InvalidInputError("write failed: " + path);
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw InvalidInputError("malformed JSON in " + path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::string text = read_text_file(path);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
    } else {
      field.push_back(c);
    }
  }
  if (!field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

// --- item bank ---------------------------------------------------------------

json bank_to_json(const ItemBank& bank) {
  json items = json::array();
  for (const auto& it : bank.items) {
    items.push_back({{"id", it.id},
                     {"stem", it.stem},
                     {"options", it.options},
                     {"correct_index", it.correct_index},
                     {"source", it.source_snippet},
                     {"model", it.model},
                     {"temperature", it.temperature},
                     {"timestamp", it.timestamp}});
  }
  json failures = json::array();
  for (const auto& f : bank.failures) {
    failures.push_back({{"snippet_id", f.snippet_id},
                        {"kind", f.kind},
                        {"detail", f.detail},
                        {"attempts", f.attempts}});
  }
  return json{{"format", "qacal-bank-v1"}, {"items", items}, {"failures", failures}};
}

ItemBank bank_from_json(const json& doc) {
  expect_format(doc, "qacal-bank-v1");
  ItemBank bank;
  for (const auto& it : doc.at("items")) {
    GeneratedItem item;
    item.id = it.at("id").get<std::string>();
    item.stem = it.at("stem").get<std::string>();
    auto opts = it.at("options");
    if (!opts.is_array() || opts.size() != 4)
      throw InvalidInputError("bank item " + item.id + " does not have 4 options");
    for (int i = 0; i < 4; ++i) item.options[i] = opts[i].get<std::string>();
    item.correct_index = it.at("correct_index").get<int>();
    if (item.correct_index < 0 || item.correct_index > 3)
      throw InvalidInputError("bank item " + item.id + " correct_index out of range");
    item.source_snippet = it.value("source", "");
    item.model = it.value("model", "");
    item.temperature = it.value("temperature", 0.2);
    item.timestamp = it.value("timestamp", "");
    bank.items.push_back(std::move(item));
  }
  if (doc.contains("failures")) {
    for (const auto& f : doc["failures"]) {
      bank.failures.push_back({f.at("snippet_id").get<std::string>(),
                               f.at("kind").get<std::string>(), f.value("detail", ""),
                               f.value("attempts", 0)});
    }
  }
  return bank;
}

std::map<std::string, int> key_from_json(const json& doc) {
  expect_format(doc, "qacal-key-v1");
  std::map<std::string, int> key;
  for (const auto& [id, idx] : doc.at("key").items()) key[id] = idx.get<int>();
  return key;
}

// --- response matrix -----------------------------------------------------------

json matrix_to_json(const ResponseMatrix& matrix) {
  json items = json::array();
  for (const auto& it : matrix.items()) {
    json spec = {{"id", it.id},
                 {"kind", it.kind == ItemKind::dichotomous ? "dichotomous" : "graded"}};
    if (it.kind == ItemKind::graded) spec["n_categories"] = it.n_categories;
    items.push_back(spec);
  }
  json cells = json::array();
  for (std::size_t p = 0; p < matrix.n_persons(); ++p) {
    json row = json::array();
    for (std::size_t i = 0; i < matrix.n_items(); ++i) {
      int v = matrix.cell(p, i);
      row.push_back(v == ResponseMatrix::kAbsent ? json(nullptr) : json(v));
    }
    cells.push_back(std::move(row));
  }
  return json{{"format", "qacal-matrix-v1"},
              {"person_ids", matrix.person_ids()},
              {"items", items},
              {"cells", cells}};
}

ResponseMatrix matrix_from_json(const json& doc) {
  expect_format(doc, "qacal-matrix-v1");
  std::vector<std::string> person_ids = doc.at("person_ids").get<std::vector<std::string>>();
  std::vector<ItemSpec> items;
  for (const auto& it : doc.at("items")) {
    ItemSpec spec;
    spec.id = it.at("id").get<std::string>();
    std::string kind = it.at("kind").get<std::string>();
    if (kind == "dichotomous") {
      spec.kind = ItemKind::dichotomous;
    } else if (kind == "graded") {
      spec.kind = ItemKind::graded;
      spec.n_categories = it.value("n_categories", 5);
    } else {
      throw InvalidInputError("unknown item kind: " + kind);
    }
    items.push_back(std::move(spec));
  }
  ResponseMatrix matrix(std::move(person_ids), std::move(items));
  const auto& cells = doc.at("cells");
  if (cells.size() != matrix.n_persons())
    throw InvalidInputError("matrix cells row count does not match person_ids");
  for (std::size_t p = 0; p < matrix.n_persons(); ++p) {
    if (cells[p].size() != matrix.n_items())
      throw InvalidInputError("matrix cells column count mismatch at row " + std::to_string(p));
    for (std::size_t i = 0; i < matrix.n_items(); ++i)
      if (!cells[p][i].is_null()) matrix.set_cell(p, i, cells[p][i].get<int>());
  }
  return matrix;
}

// --- opinions -------------------------------------------------------------------

json opinions_to_json(const OpinionTable& opinions) {
  auto table = [&](const std::vector<std::string>& flat) {
    json rows = json::array();
    for (std::size_t p = 0; p < opinions.person_ids.size(); ++p) {
      json row = json::array();
      for (std::size_t q = 0; q < opinions.questions.size(); ++q) {
        const std::string& v = flat[p * opinions.questions.size() + q];
        row.push_back(v.empty() ? json(nullptr) : json(v));
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };
  return json{{"format", "qacal-opinions-v1"},
              {"person_ids", opinions.person_ids},
              {"questions", opinions.questions},
              {"opinion", table(opinions.opinion)},
              {"comment", table(opinions.comment)},
              {"alternative", table(opinions.alternative)}};
}

OpinionTable opinions_from_json(const json& doc) {
  expect_format(doc, "qacal-opinions-v1");
  OpinionTable t;
  t.person_ids = doc.at("person_ids").get<std::vector<std::string>>();
  t.questions = doc.at("questions").get<std::vector<std::string>>();
  auto untable = [&](const char* name, std::vector<std::string>& flat) {
    flat.assign(t.person_ids.size() * t.questions.size(), "");
    const auto& rows = doc.at(name);
    for (std::size_t p = 0; p < t.person_ids.size(); ++p)
      for (std::size_t q = 0; q < t.questions.size(); ++q)
        if (!rows[p][q].is_null()) flat[p * t.questions.size() + q] = rows[p][q].get<std::string>();
  };
  untable("opinion", t.opinion);
  untable("comment", t.comment);
  untable("alternative", t.alternative);
  return t;
}

// --- calibration result -----------------------------------------------------------

json calibration_to_json(const CalibrationResult& result) {
  json items = json::array();
  for (std::size_t j = 0; j < result.items.size(); ++j) {
    const ItemParams& p = result.items[j];
    json entry = {{"id", p.id}};
    if (p.is_dichotomous()) {
      entry["kind"] = "dichotomous";
      entry["a"] = p.dich().a;
      entry["d"] = p.dich().d;
      entry["b"] = opt_to_json(p.dich().b);
    } else {
      entry["kind"] = "graded";
      entry["a"] = p.graded().a;
      entry["thresholds"] = p.graded().thresholds;
      entry["category_map"] = p.graded().category_map;
    }
    if (j < result.ses.size()) {
      entry["se_a"] = std::isfinite(result.ses[j].se_a) ? json(result.ses[j].se_a) : json(nullptr);
      json se_loc = json::array();
      for (double v : result.ses[j].se_loc)
        se_loc.push_back(std::isfinite(v) ? json(v) : json(nullptr));
      entry["se_loc"] = se_loc;
      entry["unreliable"] = result.ses[j].unreliable;
    }
    items.push_back(std::move(entry));
  }
  json dropped = json::array();
  for (const auto& d : result.dropped) dropped.push_back({{"id", d.id}, {"reason", d.reason}});
  return json{{"format", "qacal-params-v1"},
              {"config",
               {{"n_quadrature", result.config.n_quadrature},
                {"max_em_cycles", result.config.max_em_cycles},
                {"em_tolerance", result.config.em_tolerance},
                {"inner_newton_max_iter", result.config.inner_newton_max_iter},
                {"inner_newton_tolerance", result.config.inner_newton_tolerance},
                {"slope_clamp", result.config.slope_clamp},
                {"seed", result.config.seed}}},
              {"log_likelihood", result.log_likelihood},
              {"n_cycles", result.n_cycles},
              {"converged", result.converged},
              {"se_method", "cross-product"},
              {"dropped", dropped},
              {"items", items},
              {"cycle_log_likelihoods", result.cycle_log_likelihoods}};
}

CalibrationResult calibration_from_json(const json& doc) {
  expect_format(doc, "qacal-params-v1");
  CalibrationResult result;
  const auto& cfg = doc.at("config");
  result.config.n_quadrature = cfg.value("n_quadrature", 10);
  result.config.max_em_cycles = cfg.value("max_em_cycles", 500);
  result.config.em_tolerance = cfg.value("em_tolerance", 1e-4);
  result.config.inner_newton_max_iter = cfg.value("inner_newton_max_iter", 50);
  result.config.inner_newton_tolerance = cfg.value("inner_newton_tolerance", 1e-12);
  result.config.slope_clamp = cfg.value("slope_clamp", 6.0);
  result.config.seed = cfg.value("seed", std::uint64_t{1});
  result.log_likelihood = doc.at("log_likelihood").get<double>();
  result.n_cycles = doc.at("n_cycles").get<int>();
  result.converged = doc.at("converged").get<bool>();
  if (doc.contains("cycle_log_likelihoods"))
    result.cycle_log_likelihoods = doc["cycle_log_likelihoods"].get<std::vector<double>>();
  for (const auto& d : doc.at("dropped"))
    result.dropped.push_back({d.at("id").get<std::string>(), d.at("reason").get<std::string>()});
  for (const auto& entry : doc.at("items")) {
    std::string id = entry.at("id").get<std::string>();
    std::string kind = entry.at("kind").get<std::string>();
    if (kind == "dichotomous") {
      Dichotomous2PL p = Dichotomous2PL::from_ad(entry.at("a").get<double>(),
                                                 entry.at("d").get<double>());
      result.items.push_back({id, p});
    } else {
      GradedParams g;
      g.a = entry.at("a").get<double>();
      g.thresholds = entry.at("thresholds").get<std::vector<double>>();
      g.category_map = entry.at("category_map").get<std::vector<int>>();
      g.validate();
      result.items.push_back({id, std::move(g)});
    }
    ItemStandardErrors se;
    if (entry.contains("se_a") && !entry["se_a"].is_null()) se.se_a = entry["se_a"].get<double>();
    if (entry.contains("se_loc"))
      for (const auto& v : entry["se_loc"])
        se.se_loc.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                        : v.get<double>());
    se.unreliable = entry.value("unreliable", false);
    result.ses.push_back(std::move(se));
  }
  return result;
}

// --- DIF report -------------------------------------------------------------------

json dif_report_to_json(const DifReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"item", r.item},
                    {"delta_log_odds", r.delta_log_odds},
                    {"p_value", r.wald_p_value},
                    {"flagged", r.flagged},
                    {"separation", r.separation_detected},
                    {"n_low", r.n_low},
                    {"n_high", r.n_high},
                    {"log_lik", r.log_lik},
                    {"null_log_lik", r.null_log_lik}});
  }
  json skipped = json::array();
  for (const auto& s : report.skipped)
    skipped.push_back({{"item", s.item}, {"reason", s.reason}});
  return json{{"format", "qacal-dif-v1"},
              {"config",
               {{"delta_flag_threshold", report.config.delta_flag_threshold},
                {"alpha", report.config.alpha},
                {"grouping", report.config.grouping == DifGrouping::median_split
                                 ? "median-split"
                                 : "external"}}},
              {"n_low", report.n_low},
              {"n_high", report.n_high},
              {"rows", rows},
              {"skipped", skipped}};
}

// --- simulation spec -----------------------------------------------------------------

SimSpec simspec_from_json(const json& doc) {
  expect_format(doc, "qacal-simspec-v1");
  SimSpec spec;
  if (!doc.contains("seed")) throw InvalidInputError("simspec: seed is mandatory");
  spec.seed = doc["seed"].get<std::uint64_t>();
  spec.seed_set = true;
  spec.n_persons = doc.at("n_persons").get<int>();
  if (doc.contains("theta")) {
    spec.theta_mean = doc["theta"].value("mean", 0.0);
    spec.theta_sd = doc["theta"].value("sd", 1.0);
    spec.group_theta_shift = doc["theta"].value("group_shift", 0.0);
  }
  for (const auto& it : doc.at("items")) {
    std::string id = it.at("id").get<std::string>();
    std::string kind = it.value("kind", "dichotomous");
    if (kind == "dichotomous") {
      double a = it.at("a").get<double>();
      Dichotomous2PL p = it.contains("b")
                             ? Dichotomous2PL::from_ab(a, it["b"].get<double>())
                             : Dichotomous2PL::from_ad(a, it.value("d", 0.0));
      spec.items.push_back({id, p});
    } else if (kind == "graded") {
      GradedParams g;
      g.a = it.at("a").get<double>();
      g.thresholds = it.at("thresholds").get<std::vector<double>>();
      int declared = it.value("n_categories", g.n_modeled());
      g.category_map = GradedParams::identity_map(declared);
      if (declared != g.n_modeled())
        throw InvalidInputError("simspec item " + id +
                                ": n_categories must equal thresholds + 1");
      g.validate();
      spec.items.push_back({id, std::move(g)});
    } else {
      throw InvalidInputError("simspec: unknown item kind " + kind);
    }
  }
  if (doc.contains("dif"))
    for (const auto& [id, shift] : doc["dif"].items())
      spec.dif_shifts[id] = shift.get<double>();
  return spec;
}

json simspec_to_json(const SimSpec& spec) {
  json items = json::array();
  for (const auto& it : spec.items) {
    if (it.is_dichotomous()) {
      json entry = {{"id", it.id}, {"kind", "dichotomous"}, {"a", it.dich().a}};
      if (it.dich().b.has_value())
        entry["b"] = *it.dich().b;
      else
        entry["d"] = it.dich().d;
      items.push_back(std::move(entry));
    } else {
      items.push_back({{"id", it.id},
                       {"kind", "graded"},
                       {"a", it.graded().a},
                       {"thresholds", it.graded().thresholds},
                       {"n_categories", it.graded().n_declared()}});
    }
  }
  json dif = json::object();
  for (const auto& [id, shift] : spec.dif_shifts) dif[id] = shift;
  return json{{"format", "qacal-simspec-v1"},
              {"seed", spec.seed},
              {"n_persons", spec.n_persons},
              {"theta",
               {{"mean", spec.theta_mean},
                {"sd", spec.theta_sd},
                {"group_shift", spec.group_theta_shift}}},
              {"items", items},
              {"dif", dif}};
}

// --- CSV ingestion ----------------------------------------------------------------------

IngestResult ingest_responses_csv(const std::string& csv_path,
                                  const std::map<std::string, int>& answer_key) {
  auto rows = read_csv(csv_path);
  if (rows.empty()) throw InvalidInputError("responses CSV is empty: " + csv_path);
  const auto& header = rows[0];
  if (header.empty() || header[0] != "person_id")
    throw InvalidInputError("responses CSV must start with a person_id column");

  enum class ColKind { exam, assess, opinion, comment, alternative };
  struct Column {
    std::size_t index;
    ColKind kind;
    std::string item_id;  // full header for exam/assess, suffix for the rest
  };
  std::vector<Column> columns;
  std::vector<std::string> offenders;
  auto suffix_after = [](const std::string& s, const char* prefix) {
    return s.substr(std::string(prefix).size());
  };
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h.rfind("exam_", 0) == 0)
      columns.push_back({c, ColKind::exam, h});
    else if (h.rfind("assess_", 0) == 0)
      columns.push_back({c, ColKind::assess, h});
    else if (h.rfind("opinion_", 0) == 0)
      columns.push_back({c, ColKind::opinion, suffix_after(h, "opinion_")});
    else if (h.rfind("comment_", 0) == 0)
      columns.push_back({c, ColKind::comment, suffix_after(h, "comment_")});
    else if (h.rfind("alternative_", 0) == 0)
      columns.push_back({c, ColKind::alternative, suffix_after(h, "alternative_")});
    else
      offenders.push_back(h);
  }
  if (!offenders.empty()) {
    std::string msg = "unknown item columns:";
    for (const auto& o : offenders) msg += " " + o;
    throw InvalidInputError(msg);
  }

  // Person rows (skip empty trailing lines).
  std::vector<std::vector<std::string>> body;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() == 1 && rows[r][0].empty()) continue;
    if (rows[r].size() != header.size())
      throw InvalidInputError("row " + std::to_string(r + 1) + " has " +
                              std::to_string(rows[r].size()) + " fields, expected " +
                              std::to_string(header.size()));
    body.push_back(rows[r]);
  }

  std::vector<std::string> person_ids;
  for (const auto& row : body) person_ids.push_back(row[0]);

  auto parse_int = [](const std::string& s, std::size_t r, std::size_t c) {
    try {
      std::size_t pos = 0;
      int v = std::stoi(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw InvalidInputError("non-numeric response at row " + std::to_string(r + 2) +
                              ", column " + std::to_string(c + 1));
    }
  };

  // Exam columns: decide per column whether values are pre-scored 0/1 or
  // 1-based chosen option indices.
  std::vector<ItemSpec> item_specs;
  std::vector<const Column*> item_columns;
  for (const auto& col : columns)
    if (col.kind == ColKind::exam) {
      item_specs.push_back({col.item_id, ItemKind::dichotomous, 2});
      item_columns.push_back(&col);
    }
  for (const auto& col : columns)
    if (col.kind == ColKind::assess) {
      item_specs.push_back({col.item_id, ItemKind::graded, 5});
      item_columns.push_back(&col);
    }

  IngestResult result{ResponseMatrix(person_ids, item_specs), OpinionTable{}, 0};

  for (std::size_t j = 0; j < item_columns.size(); ++j) {
    const Column& col = *item_columns[j];
    if (col.kind == ColKind::exam) {
      bool option_mode = false;
      for (std::size_t r = 0; r < body.size(); ++r) {
        const std::string& cell = body[r][col.index];
        if (cell.empty()) continue;
        if (parse_int(cell, r, col.index) > 1) option_mode = true;
      }
      int key_index = -1;
      if (option_mode) {
        auto it = answer_key.find(col.item_id);
        if (it == answer_key.end())
          throw InvalidInputError("column " + col.item_id +
                                  " holds option indices but the answer key has no entry for it");
        key_index = it->second;
      }
      for (std::size_t r = 0; r < body.size(); ++r) {
        const std::string& cell = body[r][col.index];
        if (cell.empty()) continue;
        int v = parse_int(cell, r, col.index);
        if (option_mode) {
          if (v < 1 || v > 4)
            throw InvalidInputError("option index out of range 1..4 at row " +
                                    std::to_string(r + 2) + ", column " + col.item_id);
          result.matrix.set_cell(r, j, v - 1 == key_index ? 1 : 0);
          ++result.n_option_scored;
        } else {
          if (v != 0 && v != 1)
            throw InvalidInputError("exam response out of range at row " + std::to_string(r + 2) +
                                    ", column " + col.item_id);
          result.matrix.set_cell(r, j, v);
        }
      }
    } else {
      for (std::size_t r = 0; r < body.size(); ++r) {
        const std::string& cell = body[r][col.index];
        if (cell.empty()) continue;
        int v = parse_int(cell, r, col.index);
        if (v < 1 || v > 5)
          throw InvalidInputError("assess rating out of range 1..5 at row " +
                                  std::to_string(r + 2) + ", column " + col.item_id);
        result.matrix.set_cell(r, j, v);
      }
    }
  }

  // Opinion/comment/alternative sidecar.
  std::vector<std::string> questions;
  for (const auto& col : columns) {
    if (col.kind != ColKind::opinion && col.kind != ColKind::comment &&
        col.kind != ColKind::alternative)
      continue;
    if (std::find(questions.begin(), questions.end(), col.item_id) == questions.end())
      questions.push_back(col.item_id);
  }
  OpinionTable& op = result.opinions;
  op.person_ids = person_ids;
  op.questions = questions;
  op.opinion.assign(person_ids.size() * questions.size(), "");
  op.comment.assign(person_ids.size() * questions.size(), "");
  op.alternative.assign(person_ids.size() * questions.size(), "");
  for (const auto& col : columns) {
    std::vector<std::string>* target = nullptr;
    if (col.kind == ColKind::opinion) target = &op.opinion;
    else if (col.kind == ColKind::comment) target = &op.comment;
    else if (col.kind == ColKind::alternative) target = &op.alternative;
    else continue;
    std::size_t q = std::find(questions.begin(), questions.end(), col.item_id) -
                    questions.begin();
    for (std::size_t r = 0; r < body.size(); ++r) {
      const std::string& cell = body[r][col.index];
      if (cell.empty()) continue;
      if (col.kind == ColKind::opinion) {
        bool known = false;
        for (const char* choice : kOpinionChoices)
          if (cell == choice) known = true;
        if (!known)
          throw InvalidInputError("unknown opinion \"" + cell + "\" at row " +
                                  std::to_string(r + 2) + ", column opinion_" + col.item_id);
      }
      (*target)[r * questions.size() + q] = cell;
    }
  }
  return result;
}

// --- tabular emitters ------------------------------------------------------------------

std::string ability_table_csv(const std::vector<AbilityEstimate>& abilities) {
  std::string out = "person_id,theta_eap,posterior_sd,n_answered\n";
  for (const auto& a : abilities) {
    out += csv_escape(a.person_id) + "," + num10(a.theta_eap) + "," + num10(a.posterior_sd) +
           "," + std::to_string(a.n_items_answered) + "\n";
  }
  return out;
}

std::string information_curve_csv(const InformationCurve& curve) {
  std::string out = "theta,total";
  for (const auto& id : curve.item_ids) out += "," + csv_escape(id);
  out += "\n";
  for (std::size_t t = 0; t < curve.theta.size(); ++t) {
    out += num10(curve.theta[t]) + "," + num10(curve.total[t]);
    for (std::size_t j = 0; j < curve.item_ids.size(); ++j) out += "," + num10(curve.at(j, t));
    out += "\n";
  }
  return out;
}

namespace {
std::string opt_num(const std::optional<double>& v) { return v ? num10(*v) : ""; }
}  // namespace

std::string aggregates_csv(const std::vector<ItemAggregate>& rows) {
  std::string out =
      "item,avg_assessment,avg_exam_score,difficulty,discrimination,"
      "is_reasonable,is_too_easy,is_complicated,is_ambiguous\n";
  for (const auto& r : rows) {
    out += csv_escape(r.question) + "," + opt_num(r.mean_assessment) + "," +
           opt_num(r.mean_exam_score) + "," + opt_num(r.difficulty) + "," +
           opt_num(r.discrimination) + "," + opt_num(r.prop_reasonable) + "," +
           opt_num(r.prop_too_easy) + "," + opt_num(r.prop_complicated) + "," +
           opt_num(r.prop_ambiguous) + "\n";
  }
  return out;
}

std::string correlation_plot_csv(const CorrelationMatrix& matrix) {
  std::string out = "label";
  for (const auto& l : matrix.labels) out += "," + csv_escape(l);
  out += "\n";
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out += csv_escape(matrix.labels[i]);
    for (std::size_t j = 0; j < matrix.size(); ++j) out += "," + num10(matrix.r_at(i, j));
    out += "\n";
  }
  return out;
}

json correlation_to_json(const CorrelationMatrix& matrix) {
  auto grid = [&](const std::vector<double>& flat) {
    json rows = json::array();
    for (std::size_t i = 0; i < matrix.size(); ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < matrix.size(); ++j) {
        double v = flat[i * matrix.size() + j];
        row.push_back(std::isnan(v) ? json(nullptr) : json(v));
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };
  json n_rows = json::array();
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < matrix.size(); ++j) row.push_back(matrix.n[i * matrix.size() + j]);
    n_rows.push_back(std::move(row));
  }
  return json{{"format", "qacal-corr-v1"},
              {"labels", matrix.labels},
              {"r", grid(matrix.r)},
              {"p", grid(matrix.p)},
              {"n", n_rows}};
}

std::string disagreement_csv(const DisagreementProfile& profile) {
  std::string out = "feature,r,p,n\n";
  for (std::size_t f = 0; f < profile.features.size(); ++f) {
    out += csv_escape(profile.features[f]) + "," + num10(profile.r[f]) + "," +
           num10(profile.p[f]) + "," + std::to_string(profile.n[f]) + "\n";
  }
  return out;
}

std::string dichotomous_table(const CalibrationResult& result) {
  std::string out = "item,a,b\n";
  for (const auto& p : result.items) {
    if (!p.is_dichotomous()) continue;
    out += csv_escape(p.id) + "," + fmt("%.4f", p.dich().a) + ",";
    if (p.dich().b.has_value())
      out += fmt("%.4f", *p.dich().b);
    else
      out += "unstable(d=" + fmt("%.4f", p.dich().d) + ")";
    out += "\n";
  }
  return out;
}

std::string graded_table(const CalibrationResult& result) {
  std::size_t max_th = 0;
  for (const auto& p : result.items)
    if (!p.is_dichotomous()) max_th = std::max(max_th, p.graded().thresholds.size());
  if (max_th == 0) max_th = 4;
  std::string out = "item,a";
  for (std::size_t t = 1; t <= max_th; ++t) out += ",b" + std::to_string(t);
  out += "\n";
  for (const auto& p : result.items) {
    if (p.is_dichotomous()) continue;
    out += csv_escape(p.id) + "," + fmt("%.4f", p.graded().a);
    for (std::size_t t = 0; t < max_th; ++t) {
      out += ",";
      if (t < p.graded().thresholds.size()) out += fmt("%.4f", p.graded().thresholds[t]);
    }
    out += "\n";
  }
  return out;
}

std::string dif_table(const DifReport& report) {
  std::string out = "item,delta_log_odds,p_value,flagged,separation\n";
  for (const auto& r : report.rows) {
    out += csv_escape(r.item) + "," + fmt("%.4f", r.delta_log_odds) + "," +
           fmt("%.4f", r.wald_p_value) + "," + (r.flagged ? "true" : "false") + "," +
           (r.separation_detected ? "true" : "false") + "\n";
  }
  return out;
}

std::string text_heatmap(const CorrelationMatrix& matrix) {
  // Coarse ASCII shading of |r|, sign shown by character class.
  auto shade = [](double r) {
    if (std::isnan(r)) return std::string("  . ");
    char buf[8];
    std::snprintf(buf, sizeof buf, "%+.2f", r);
    return std::string(buf);
  };
  std::size_t label_w = 5;
  for (const auto& l : matrix.labels) label_w = std::max(label_w, l.size());
  std::string out;
  out += std::string(label_w, ' ');
  for (std::size_t j = 0; j < matrix.size(); ++j) {
    std::string tag = matrix.labels[j].substr(0, 5);
    out += " " + std::string(6 - std::min<std::size_t>(tag.size(), 5) - 1, ' ') + tag;
  }
  out += "\n";
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    std::string label = matrix.labels[i];
    out += label + std::string(label_w - label.size(), ' ');
    for (std::size_t j = 0; j < matrix.size(); ++j) out += " " + shade(matrix.r_at(i, j));
    out += "\n";
  }
  return out;
}

}  // namespace qacal
