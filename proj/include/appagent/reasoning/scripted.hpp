#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "appagent/reasoning/port.hpp"

namespace appagent {

enum class ScriptPolicy { kError, kFallback };

/// One scripted reply. Matching precedence for a stimulus of the same kind:
/// an entry whose `digest` equals the payload digest, then one whose `query`
/// normalizes to the payload's query, then a wildcard (`any`).
struct ScriptEntry {
  StimulusKind kind = StimulusKind::kAssess;
  std::optional<std::string> digest;
  std::optional<std::string> query;
  bool any = false;
  Json response;
};

struct ScriptedResponses {
  std::vector<ScriptEntry> entries;
  ScriptPolicy default_policy = ScriptPolicy::kError;
  std::string fallback_answer = "I can answer this directly without opening any apps.";
};

ScriptedResponses parse_script(const Json& doc);
ScriptedResponses load_script(const std::filesystem::path& path);
Json script_to_json(const ScriptedResponses& script);

/// Deterministic test double. Holds no mutable state: equal stimuli always
/// produce byte-equal documents. Strings in a response may use `{query}` and
/// `{round}`, which expand from the stimulus payload.
class ScriptedBackend : public DocumentBackend {
 public:
  explicit ScriptedBackend(ScriptedResponses script);

  /// The document the backend would return for `stimulus`, before validation.
  Json respond(const ReasoningStimulus& stimulus) const;

 protected:
  Json complete(const ReasoningStimulus& stimulus, const std::optional<std::string>& repair_hint) override;

 private:
  Json fallback(const ReasoningStimulus& stimulus) const;

  ScriptedResponses script_;
};

}  // namespace appagent
