#include "qacal/genpipe.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <mutex>
#include <thread>

#include "qacal/errors.hpp"

namespace qacal {

using nlohmann::json;

namespace {

// The fixed generation instruction, followed by the structured-output
// directive that pins four options and a marked correct answer.
const char* const kSystemPrompt =
    "Based on the context given by the user, generate a question that can be answered using "
    "the mentioned text. Remember that the question will be answered without looking at that "
    "context, so generate a question that will allow students familiar with it to answer it "
    "correctly.\n\n"
    "Generate a multiple-choice question with exactly four answer options and identify the "
    "correct answer from the provided choices. Respond with a single JSON object with fields "
    "\"question\" (string), \"options\" (array of exactly four strings) and \"correct_answer\" "
    "(the correct option, repeated verbatim, or its 0-based index).";

std::string normalize_ws(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // trims leading space
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::string zero_pad(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  while (s.size() < width) s.insert(s.begin(), '0');
  return s;
}

std::size_t key_width(std::size_t count) {
  std::size_t w = std::to_string(count).size();
  return w < 2 ? 2 : w;
}

}  // namespace

PromptPair build_prompt(const ContextSnippet& snippet) {
  if (snippet.text.empty()) throw InvalidInputError("snippet " + snippet.id + " has empty text");
  return {kSystemPrompt, snippet.text};
}

json extract_payload(const std::string& text) {
  // Scan for the first balanced top-level object; tolerates fences and prose.
  for (std::size_t start = text.find('{'); start != std::string::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped)
          escaped = false;
        else if (c == '\\')
          escaped = true;
        else if (c == '"')
          in_string = false;
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          try {
            return json::parse(text.substr(start, i - start + 1));
          } catch (const json::exception&) {
            break;  // not valid JSON; try the next candidate
          }
        }
      }
    }
  }
  throw InvalidInputError("no JSON object found in provider output");
}

ValidationResult validate_item(const json& payload) {
  ValidationResult res;
  auto issue = [&res](const std::string& rule, const std::string& detail) {
    res.issues.push_back({rule, detail});
  };

  std::string stem;
  if (payload.contains("question") && payload["question"].is_string())
    stem = normalize_ws(payload["question"].get<std::string>());
  else if (payload.contains("stem") && payload["stem"].is_string())
    stem = normalize_ws(payload["stem"].get<std::string>());
  if (stem.empty()) issue("missing-field", "question text missing or empty");

  std::vector<std::string> options;
  if (!payload.contains("options") || !payload["options"].is_array()) {
    issue("missing-field", "options array missing");
  } else {
    for (const auto& o : payload["options"]) {
      if (!o.is_string()) {
        issue("missing-field", "non-string option");
        break;
      }
      options.push_back(normalize_ws(o.get<std::string>()));
    }
    if (options.size() == payload["options"].size() && options.size() != 4)
      issue("option-count", "expected 4 options, got " + std::to_string(options.size()));
  }

  if (options.size() == 4) {
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        if (options[i] == options[j]) {
          issue("duplicate-option", "options " + std::to_string(i) + " and " +
                                        std::to_string(j) + " coincide");
          i = j = 4;
        }
  }

  int correct_index = -1;
  const json* correct = nullptr;
  if (payload.contains("correct_answer"))
    correct = &payload["correct_answer"];
  else if (payload.contains("correct_index"))
    correct = &payload["correct_index"];
  if (correct == nullptr) {
    issue("missing-field", "correct answer missing");
  } else if (correct->is_number_integer()) {
    long long idx = correct->get<long long>();
    if (idx < 0 || idx > 3)
      issue("correct-index-range", "index " + std::to_string(idx) + " outside 0..3");
    else
      correct_index = static_cast<int>(idx);
  } else if (correct->is_string()) {
    std::string want = normalize_ws(correct->get<std::string>());
    for (std::size_t i = 0; i < options.size(); ++i)
      if (options[i] == want) {
        correct_index = static_cast<int>(i);
        break;
      }
    if (correct_index < 0 && options.size() == 4)
      issue("correct-mismatch", "correct answer matches no option");
  } else {
    issue("missing-field", "correct answer is neither index nor string");
  }

  if (!res.issues.empty()) return res;

  GeneratedItem item;
  item.stem = stem;
  for (int i = 0; i < 4; ++i) item.options[i] = options[i];
  item.correct_index = correct_index;
  res.item = std::move(item);
  return res;
}

GenerationRun generate_items(const std::vector<ContextSnippet>& snippets, Provider& provider,
                             const GenConfig& config) {
  struct Slot {
    std::optional<GeneratedItem> item;
    std::optional<GenerationFailure> failure;
  };
  const int per = std::max(1, config.n_per_snippet);
  const std::size_t n_tasks = snippets.size() * per;
  std::vector<Slot> slots(n_tasks);

  auto run_task = [&](std::size_t t) {
    const ContextSnippet& snippet = snippets[t / per];
    Slot& slot = slots[t];
    PromptPair prompt;
    try {
      prompt = build_prompt(snippet);
    } catch (const InvalidInputError& e) {
      slot.failure = GenerationFailure{snippet.id, "validation", e.what(), 0};
      return;
    }
    std::vector<ValidationIssue> last_issues;
    for (int attempt = 1; attempt <= std::max(1, config.retry_limit); ++attempt) {
      std::string text;
      try {
        text = provider.complete(prompt.system, prompt.user, config.temperature,
                                 config.model_id);
      } catch (const ProviderError& e) {
        slot.failure = GenerationFailure{snippet.id, "transport", e.what(), attempt};
        return;
      }
      ValidationResult v;
      try {
        v = validate_item(extract_payload(text));
      } catch (const InvalidInputError& e) {
        v.issues.push_back({"missing-field", e.what()});
      }
      if (v.ok()) {
        GeneratedItem item = std::move(*v.item);
        item.source_snippet = snippet.id;
        item.model = config.model_id;
        item.temperature = config.temperature;
        item.timestamp = provider.item_timestamp();
        slot.item = std::move(item);
        return;
      }
      last_issues = std::move(v.issues);
    }
    std::string detail;
    for (const auto& is : last_issues) {
      if (!detail.empty()) detail += "; ";
      detail += is.rule + ": " + is.detail;
    }
    slot.failure =
        GenerationFailure{snippet.id, "validation", detail, std::max(1, config.retry_limit)};
  };

  int in_flight = provider.sequential_only() ? 1 : std::max(1, config.in_flight);
  if (in_flight == 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    int n_workers = std::min<std::size_t>(in_flight, n_tasks);
    workers.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w)
      workers.emplace_back([&] {
        for (std::size_t t = next.fetch_add(1); t < n_tasks; t = next.fetch_add(1)) run_task(t);
      });
    for (auto& w : workers) w.join();
  }

  // Results keep snippet order regardless of completion order.
  GenerationRun run;
  for (auto& slot : slots) {
    if (slot.item) {
      slot.item->id = "exam_" + std::to_string(run.items.size() + 1);
      run.items.push_back(std::move(*slot.item));
    } else if (slot.failure) {
      run.failures.push_back(std::move(*slot.failure));
    }
  }
  return run;
}

json export_form(const std::vector<GeneratedItem>& items) {
  if (items.empty()) throw InvalidInputError("export_form: empty item bank");
  const std::size_t width = key_width(items.size());
  json blocks = json::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::string num = zero_pad(i + 1, width);
    json question = {{"key", "q" + num},
                     {"type", "question"},
                     {"item_id", items[i].id},
                     {"stem", items[i].stem},
                     {"options", items[i].options}};
    blocks.push_back(question);
    json assessment = {
        {"key", "a" + num},
        {"type", "assessment"},
        {"item_id", items[i].id},
        {"fields",
         json::array(
             {{{"key", "a" + num + "_stars"},
               {"type", "stars"},
               {"label", "Rate the goodness of this question"},
               {"min", 1},
               {"max", 5}},
              {{"key", "a" + num + "_opinion"},
               {"type", "choice"},
               {"label", "Your opinion of this question"},
               {"choices", json::array({"reasonable", "too_easy", "complicated", "ambiguous"})}},
              {{"key", "a" + num + "_comment"},
               {"type", "text"},
               {"label", "Comment on the question"}},
              {{"key", "a" + num + "_alternative"},
               {"type", "text"},
               {"label", "Write a better or alternative question"}}})}};
    blocks.push_back(assessment);
  }
  return json{{"format", "qacal-form-v1"}, {"blocks", blocks}};
}

json export_answer_key(const std::vector<GeneratedItem>& items) {
  if (items.empty()) throw InvalidInputError("export_answer_key: empty item bank");
  json key = json::object();
  for (const auto& item : items) key[item.id] = item.correct_index;
  return json{{"format", "qacal-key-v1"}, {"key", key}};
}

}  // namespace qacal
