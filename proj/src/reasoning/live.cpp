#include "appagent/reasoning/live.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "appagent/core/errors.hpp"

namespace appagent {

// Generated from prompts/*.txt at configure time.
std::string_view builtin_prompt_template(std::string_view name);

LiveConfig parse_live_config(const Json& doc) {
  LiveConfig c;
  try {
    c.base_url = doc.at("base_url").get<std::string>();
    c.model = doc.at("model").get<std::string>();
    c.api_key_env = doc.value("api_key_env", c.api_key_env);
    c.timeout = std::chrono::milliseconds(doc.value("timeout_ms", c.timeout.count()));
    c.retries = doc.value("retries", c.retries);
    c.backoff = std::chrono::milliseconds(doc.value("backoff_ms", c.backoff.count()));
    c.max_in_flight = doc.value("max_in_flight", c.max_in_flight);
    if (doc.contains("prompt_dir")) c.prompt_dir = doc.at("prompt_dir").get<std::string>();
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("live backend config: ") + e.what());
  }
  if (c.retries < 0 || c.max_in_flight < 1) throw SchemaError("live backend config: bad retries/max_in_flight");
  return c;
}

LiveConfig load_live_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot read live config " + path.string());
  try {
    return parse_live_config(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw SchemaError("live config " + path.string() + ": " + e.what());
  }
}

std::string render_template(std::string_view text, const std::map<std::string, std::string>& vars) {
  std::string out;
  size_t pos = 0;
  while (true) {
    const size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      return out;
    }
    const size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) throw SchemaError("unterminated placeholder in template");
    const std::string name(text.substr(open + 2, close - open - 2));
    auto it = vars.find(name);
    if (it == vars.end()) throw SchemaError("unknown template placeholder: " + name);
    out.append(text.substr(pos, open - pos));
    out.append(it->second);
    pos = close + 2;
  }
}

std::string prompt_template(std::string_view name, const std::optional<std::filesystem::path>& dir) {
  if (dir) {
    std::ifstream in(*dir / (std::string(name) + ".txt"), std::ios::binary);
    if (!in) throw SchemaError("missing prompt template " + std::string(name) + " in " + dir->string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
  return std::string(builtin_prompt_template(name));
}

std::string render_prompt(const ReasoningStimulus& stimulus, const std::optional<std::filesystem::path>& dir) {
  const std::string query =
      stimulus.payload.contains("query") ? stimulus.payload.at("query").get<std::string>() : std::string();
  return render_template(prompt_template(to_string(stimulus.kind), dir),
                         {{"query", query}, {"payload", stimulus.payload.dump(2)}});
}

Json extract_document(std::string_view reply) {
  auto try_parse = [](std::string_view s) -> std::optional<Json> {
    Json j = Json::parse(s.begin(), s.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
  };
  if (auto j = try_parse(reply)) return *j;
  if (size_t fence = reply.find("```json"); fence != std::string_view::npos) {
    const size_t start = fence + 7;
    const size_t end = reply.find("```", start);
    if (end != std::string_view::npos) {
      if (auto j = try_parse(reply.substr(start, end - start))) return *j;
    }
  }
  const size_t first = reply.find('{');
  const size_t last = reply.rfind('}');
  if (first != std::string_view::npos && last != std::string_view::npos && last > first) {
    if (auto j = try_parse(reply.substr(first, last - first + 1))) return *j;
  }
  throw MalformedBackendOutput("reply contains no JSON document");
}

LiveBackend::LiveBackend(LiveConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) throw SchemaError("base_url needs a scheme: " + config_.base_url);
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  origin_ = config_.base_url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  system_prompt_ = prompt_template("system", config_.prompt_dir);
}

int LiveBackend::requests_sent() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::string LiveBackend::post_chat(const Json& body) {
  {
    std::unique_lock lock(mu_);
    slot_cv_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
    ++in_flight_;
  }
  struct Release {
    LiveBackend* self;
    ~Release() {
      {
        std::lock_guard lock(self->mu_);
        --self->in_flight_;
      }
      self->slot_cv_.notify_one();
    }
  } release{this};

  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const std::string path = path_prefix_ + "/chat/completions";
  const std::string payload = body.dump();
  std::string last_error;
  auto backoff = config_.backoff;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    {
      std::lock_guard lock(mu_);
      ++requests_;
    }
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400) throw BackendUnavailable("HTTP " + std::to_string(res->status) + ": " + res->body);
    Json reply = Json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) throw MalformedBackendOutput("endpoint returned non-JSON body");
    try {
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
      throw MalformedBackendOutput(std::string("unexpected completion shape: ") + e.what());
    }
  }
  throw BackendUnavailable(last_error + " after " + std::to_string(config_.retries + 1) + " attempts");
}

Json LiveBackend::complete(const ReasoningStimulus& stimulus, const std::optional<std::string>& repair_hint) {
  std::string user = render_prompt(stimulus, config_.prompt_dir);
  if (repair_hint) {
    user += "\n\nYour previous reply was rejected: " + *repair_hint +
            "\nReply again with only the corrected JSON document.";
  }
  Json body{{"model", config_.model},
            {"temperature", 0},
            {"messages", Json::array({Json{{"role", "system"}, {"content", system_prompt_}},
                                      Json{{"role", "user"}, {"content", user}}})}};
  return extract_document(post_chat(body));
}

}  // namespace appagent
