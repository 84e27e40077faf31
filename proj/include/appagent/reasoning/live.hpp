#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "appagent/reasoning/port.hpp"

namespace appagent {

struct LiveConfig {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{30'000};
  int retries = 2;
  std::chrono::milliseconds backoff{500};  // doubled after each failed attempt
  int max_in_flight = 4;
  std::optional<std::filesystem::path> prompt_dir;  // overrides the built-in templates
};

LiveConfig parse_live_config(const Json& doc);
LiveConfig load_live_config(const std::filesystem::path& path);

/// Replaces every `{{name}}` with vars[name]. Unknown or unterminated
/// placeholders throw SchemaError.
std::string render_template(std::string_view text, const std::map<std::string, std::string>& vars);

/// Template text by name ("system", "assess", "expand", "judge", "synthesize",
/// "summarize"), from `dir` when given, otherwise the copy compiled in.
std::string prompt_template(std::string_view name, const std::optional<std::filesystem::path>& dir = std::nullopt);

/// The user message sent for a stimulus.
std::string render_prompt(const ReasoningStimulus& stimulus, const std::optional<std::filesystem::path>& dir = std::nullopt);

/// Pulls the JSON object out of a chat reply: the whole text, a fenced
/// ```json block, or the outermost {...} span. Throws MalformedBackendOutput.
Json extract_document(std::string_view reply);

/// Client for a chat-completions style HTTP endpoint.
class LiveBackend : public DocumentBackend {
 public:
  explicit LiveBackend(LiveConfig config);

  /// Number of HTTP requests issued so far.
  int requests_sent() const;

 protected:
  Json complete(const ReasoningStimulus& stimulus, const std::optional<std::string>& repair_hint) override;
  bool supports_repair() const override { return true; }

 private:
  std::string post_chat(const Json& body);

  LiveConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_prefix_;
  std::string system_prompt_;

  mutable std::mutex mu_;
  std::condition_variable slot_cv_;
  int in_flight_ = 0;
  int requests_ = 0;
};

}  // namespace appagent
