#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qacal/provider.hpp"

namespace qacal {

struct ContextSnippet {
  std::string id;
  std::string text;
  std::string topic;  // optional tag, not injected into the prompt
};

struct GeneratedItem {
  std::string id;
  std::string stem;
  std::array<std::string, 4> options;
  int correct_index = 0;
  std::string source_snippet;
  std::string model;
  double temperature = 0.2;
  std::string timestamp;
};

struct PromptPair {
  std::string system;
  std::string user;
};

// System message: the fixed generation instruction with the structured-output
// directive appended. User message: the snippet text verbatim.
PromptPair build_prompt(const ContextSnippet& snippet);

struct ValidationIssue {
  std::string rule;  // missing-field | option-count | duplicate-option |
                     // correct-index-range | correct-mismatch
  std::string detail;
};

struct ValidationResult {
  std::optional<GeneratedItem> item;  // set iff issues is empty
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

// Enforces the GeneratedItem invariants on a parsed payload: four pairwise
// distinct options (after whitespace normalization), a non-empty stem, and a
// correct answer given either as index 0..3 or as a string matching one
// option (normalized to an index). Provenance fields are left blank.
ValidationResult validate_item(const nlohmann::json& payload);

// Pulls the first balanced JSON object out of provider text (tolerating
// markdown fences and prose). Throws InvalidInputError when none parses.
nlohmann::json extract_payload(const std::string& text);

struct GenConfig {
  std::string model_id = "gpt-4o";
  double temperature = 0.2;
  int n_per_snippet = 1;
  int retry_limit = 3;
  int in_flight = 4;  // concurrent provider calls (live provider only)
};

struct GenerationFailure {
  std::string snippet_id;
  std::string kind;  // "transport" | "validation"
  std::string detail;
  int attempts = 0;
};

struct GenerationRun {
  std::vector<GeneratedItem> items;  // snippet order; ids exam_1..exam_n
  std::vector<GenerationFailure> failures;
};

// One generation call per snippet (times n_per_snippet), validated with
// retries. Transport and validation failures are recorded and the run
// continues.
GenerationRun generate_items(const std::vector<ContextSnippet>& snippets, Provider& provider,
                             const GenConfig& config);

// Form schema: per item one question block plus the four assessment fields
// (stars, opinion, comment, alternative) in that order. The answer key lives
// in a separate document and never inside the form.
nlohmann::json export_form(const std::vector<GeneratedItem>& items);
nlohmann::json export_answer_key(const std::vector<GeneratedItem>& items);

}  // namespace qacal
