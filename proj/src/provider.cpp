#include "qacal/provider.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "qacal/errors.hpp"
#include "qacal/rng.hpp"

namespace qacal {

namespace fs = std::filesystem;
using nlohmann::json;

StubProvider::StubProvider(const std::string& fixture_dir, std::uint64_t seed) : seed_(seed) {
  if (fixture_dir.empty()) return;
  if (!fs::is_directory(fixture_dir))
    throw InvalidInputError("stub fixture directory not found: " + fixture_dir);
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(fixture_dir))
    if (entry.is_regular_file()) paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    fixtures_.push_back(ss.str());
  }
  if (fixtures_.empty())
    throw InvalidInputError("stub fixture directory is empty: " + fixture_dir);
}

std::string StubProvider::complete(const std::string&, const std::string& user, double,
                                   const std::string&) {
  if (!fixtures_.empty()) {
    auto it = assigned_.find(user);
    if (it == assigned_.end())
      it = assigned_.emplace(user, assigned_.size()).first;
    return fixtures_[it->second % fixtures_.size()];
  }
  // Synthesize a deterministic four-option payload keyed on the user text.
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : user) h = (h ^ c) * 1099511628211ULL;
  std::uint64_t state = h ^ seed_;
  int correct = static_cast<int>(splitmix64(state) % 4);

  std::string head = user.substr(0, 60);
  std::replace(head.begin(), head.end(), '\n', ' ');
  std::replace(head.begin(), head.end(), '"', '\'');
  json options = json::array();
  for (int i = 0; i < 4; ++i) {
    std::uint64_t tag = splitmix64(state);
    std::string text = (i == correct ? "Statement consistent with the context (key "
                                     : "Distractor statement not supported by the context (key ");
    text += std::to_string(tag % 100000) + ")";
    options.push_back(text);
  }
  json payload = {{"question", "Which statement follows from: \"" + head + "...\"?"},
                  {"options", options},
                  {"correct_answer", options[correct]}};
  return payload.dump();
}

HttpProvider::HttpProvider(std::string endpoint, std::string api_key, int timeout_seconds)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)),
      timeout_seconds_(timeout_seconds) {
  if (endpoint_.empty()) throw InvalidInputError("live provider needs an endpoint URL");
}

std::string HttpProvider::item_timestamp() const {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string HttpProvider::complete(const std::string& system, const std::string& user,
                                   double temperature, const std::string& model_id) {
  // Split endpoint into scheme://authority and base path.
  std::string scheme_host = endpoint_;
  std::string base_path;
  auto scheme_end = endpoint_.find("://");
  if (scheme_end != std::string::npos) {
    auto path_start = endpoint_.find('/', scheme_end + 3);
    if (path_start != std::string::npos) {
      scheme_host = endpoint_.substr(0, path_start);
      base_path = endpoint_.substr(path_start);
    }
  }
  if (!base_path.empty() && base_path.back() == '/') base_path.pop_back();

#ifndef QACAL_HAVE_OPENSSL
  if (scheme_host.rfind("https://", 0) == 0)
    throw ProviderError("built without TLS support; use an http:// endpoint or rebuild with OpenSSL");
#endif

  json body = {{"model", model_id},
               {"temperature", temperature},
               {"messages", json::array({{{"role", "system"}, {"content", system}},
                                         {{"role", "user"}, {"content", user}}})}};

  httplib::Client client(scheme_host);
  client.set_connection_timeout(timeout_seconds_, 0);
  client.set_read_timeout(timeout_seconds_, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto res = client.Post(base_path + "/chat/completions", headers, body.dump(),
                         "application/json");
  if (!res)
    throw ProviderError("transport failure talking to " + endpoint_ + ": " +
                        httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw ProviderError("provider returned HTTP " + std::to_string(res->status) + ": " +
                        res->body.substr(0, 400));

  json parsed;
  try {
    parsed = json::parse(res->body);
  } catch (const json::exception& e) {
    throw ProviderError(std::string("unparseable provider response: ") + e.what());
  }
  if (!parsed.contains("choices") || parsed["choices"].empty() ||
      !parsed["choices"][0].contains("message") ||
      !parsed["choices"][0]["message"].contains("content"))
    throw ProviderError("provider response missing choices[0].message.content");
  return parsed["choices"][0]["message"]["content"].get<std::string>();
}

}  // namespace qacal
