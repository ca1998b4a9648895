#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace qacal {

// A chat-completion backend: (system, user, temperature, model id) -> text.
// Implementations own all I/O; everything above them is pure.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string complete(const std::string& system, const std::string& user,
                               double temperature, const std::string& model_id) = 0;
  virtual std::string name() const = 0;
  // Provenance stamp recorded on generated items. The stub returns a fixed
  // epoch so stub runs are byte-reproducible.
  virtual std::string item_timestamp() const = 0;
  // Stubs answer from an ordered fixture list, so calls must arrive in
  // snippet order.
  virtual bool sequential_only() const { return false; }
};

// Offline provider. With a fixture directory it replays the files in sorted
// filename order: each distinct user message is assigned the next fixture on
// first sight and keeps it on retries. Without a directory it synthesizes a
// deterministic valid payload from the user message and seed.
class StubProvider : public Provider {
 public:
  StubProvider() = default;
  explicit StubProvider(const std::string& fixture_dir, std::uint64_t seed = 1);

  std::string complete(const std::string& system, const std::string& user, double temperature,
                       const std::string& model_id) override;
  std::string name() const override { return "stub"; }
  std::string item_timestamp() const override { return "1970-01-01T00:00:00Z"; }
  bool sequential_only() const override { return true; }

 private:
  std::vector<std::string> fixtures_;          // file contents, sorted by filename
  std::map<std::string, std::size_t> assigned_;  // user message -> fixture index
  std::uint64_t seed_ = 1;
};

// Chat-completion client over HTTP(S). Reads the credential from the
// QACAL_API_KEY environment variable; endpoint is scheme://host[:port][/base].
class HttpProvider : public Provider {
 public:
  HttpProvider(std::string endpoint, std::string api_key, int timeout_seconds = 60);

  std::string complete(const std::string& system, const std::string& user, double temperature,
                       const std::string& model_id) override;
  std::string name() const override { return "live"; }
  std::string item_timestamp() const override;

 private:
  std::string endpoint_;
  std::string api_key_;
  int timeout_seconds_;
};

}  // namespace qacal
