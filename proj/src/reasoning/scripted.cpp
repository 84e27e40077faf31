#include "appagent/reasoning/scripted.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "appagent/core/errors.hpp"
#include "appagent/core/ops.hpp"

namespace appagent {

namespace {

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

void expand_placeholders(Json& doc, const Json& payload) {
  if (doc.is_string()) {
    auto s = doc.get<std::string>();
    if (payload.contains("query")) replace_all(s, "{query}", payload.at("query").get<std::string>());
    if (payload.contains("round")) replace_all(s, "{round}", std::to_string(payload.at("round").get<int>()));
    doc = s;
  } else if (doc.is_array() || doc.is_object()) {
    for (auto& child : doc) expand_placeholders(child, payload);
  }
}

}  // namespace

ScriptedResponses parse_script(const Json& doc) {
  ScriptedResponses script;
  try {
    const auto policy = doc.value("default_policy", "error");
    if (policy == "error") {
      script.default_policy = ScriptPolicy::kError;
    } else if (policy == "fallback") {
      script.default_policy = ScriptPolicy::kFallback;
    } else {
      throw SchemaError("unknown default_policy: " + policy);
    }
    script.fallback_answer = doc.value("fallback_answer", script.fallback_answer);
    for (const auto& je : doc.value("entries", Json::array())) {
      ScriptEntry e;
      e.kind = parse_stimulus_kind(je.at("kind").get<std::string>());
      if (je.contains("digest")) e.digest = je.at("digest").get<std::string>();
      if (je.contains("query")) e.query = je.at("query").get<std::string>();
      e.any = je.value("any", false);
      const int selectors = int(e.digest.has_value()) + int(e.query.has_value()) + int(e.any);
      if (selectors != 1) throw SchemaError("script entry needs exactly one of digest, query, any");
      e.response = je.at("response");
      if (!e.response.is_object()) throw SchemaError("script response must be a JSON object");
      script.entries.push_back(std::move(e));
    }
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("script: ") + e.what());
  }
  return script;
}

ScriptedResponses load_script(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read script " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw SchemaError("script " + path.string() + ": " + e.what());
  }
  return parse_script(doc);
}

Json script_to_json(const ScriptedResponses& script) {
  Json entries = Json::array();
  for (const auto& e : script.entries) {
    Json je{{"kind", to_string(e.kind)}, {"response", e.response}};
    if (e.digest) je["digest"] = *e.digest;
    if (e.query) je["query"] = *e.query;
    if (e.any) je["any"] = true;
    entries.push_back(std::move(je));
  }
  return Json{{"default_policy", script.default_policy == ScriptPolicy::kError ? "error" : "fallback"},
              {"fallback_answer", script.fallback_answer},
              {"entries", entries}};
}

ScriptedBackend::ScriptedBackend(ScriptedResponses script) : script_(std::move(script)) {}

Json ScriptedBackend::respond(const ReasoningStimulus& stimulus) const {
  const ScriptEntry* by_query = nullptr;
  const ScriptEntry* wildcard = nullptr;
  const std::string digest = stimulus.digest();
  const std::string query =
      stimulus.payload.contains("query") ? normalize_query(stimulus.payload.at("query").get<std::string>()) : "";
  const ScriptEntry* match = nullptr;
  for (const auto& e : script_.entries) {
    if (e.kind != stimulus.kind) continue;
    if (e.digest && *e.digest == digest) {
      match = &e;
      break;
    }
    if (e.query && by_query == nullptr && stimulus.payload.contains("query") && normalize_query(*e.query) == query) {
      by_query = &e;
    }
    if (e.any && wildcard == nullptr) wildcard = &e;
  }
  if (match == nullptr) match = by_query != nullptr ? by_query : wildcard;
  if (match == nullptr) {
    if (script_.default_policy == ScriptPolicy::kError) {
      throw ScriptMiss("no scripted " + to_string(stimulus.kind) + " response for payload digest " + digest);
    }
    return fallback(stimulus);
  }
  Json doc = match->response;
  expand_placeholders(doc, stimulus.payload);
  return doc;
}

Json ScriptedBackend::complete(const ReasoningStimulus& stimulus, const std::optional<std::string>&) {
  return respond(stimulus);
}

Json ScriptedBackend::fallback(const ReasoningStimulus& stimulus) const {
  const Json& p = stimulus.payload;
  switch (stimulus.kind) {
    case StimulusKind::kAssess:
      return Json{{"needs_external", false},
                  {"rationale", "scripted fallback"},
                  {"base_answer", script_.fallback_answer},
                  {"subtasks", Json::array()},
                  {"mode", "shallow"}};
    case StimulusKind::kExpand: {
      Json subqueries = Json::array();
      for (const auto& st : p.at("plan").at("subtasks")) {
        subqueries.push_back(Json{{"app_id", st.at("app_id")}, {"query", st.at("seed_query")}});
      }
      return Json{{"subqueries", subqueries}};
    }
    case StimulusKind::kJudge:
      return Json{{"sufficient", true}, {"missing_aspects", Json::array()}, {"new_subqueries", Json::array()}};
    case StimulusKind::kSynthesize: {
      std::string summary = p.at("base_answer").get<std::string>();
      if (summary.empty()) summary = "Findings for: " + p.at("query").get<std::string>();
      std::vector<std::string> order;
      std::map<std::string, Json> ids;
      for (const auto& e : p.at("evidence")) {
        const auto app = e.at("app_id").get<std::string>();
        if (!ids.contains(app)) {
          order.push_back(app);
          ids[app] = Json::array();
        }
        ids[app].push_back(e.at("evidence_id"));
      }
      Json sections = Json::array();
      for (const auto& app : order) {
        sections.push_back(Json{{"app_id", app}, {"heading", app}, {"body", ""}, {"evidence_ids", ids[app]}});
      }
      return Json{{"summary", summary}, {"sections", sections}};
    }
    case StimulusKind::kSummarize: {
      const Json& steps = p.at("trace").at("steps");
      if (steps.empty()) return Json{{"note", "Answered directly without opening any apps."}};
      std::vector<std::string> apps;
      for (const auto& s : steps) {
        const auto app = s.at("app_id").get<std::string>();
        if (std::find(apps.begin(), apps.end(), app) == apps.end()) apps.push_back(app);
      }
      std::string joined;
      for (const auto& a : apps) joined += (joined.empty() ? "" : ", ") + a;
      return Json{{"note", "Used apps: " + joined + "; " + std::to_string(steps.size()) + " actions; " +
                               std::to_string(p.at("response").at("provenance").size()) + " evidence items cited."}};
    }
  }
  throw ScriptMiss("unhandled stimulus kind");
}

}  // namespace appagent
