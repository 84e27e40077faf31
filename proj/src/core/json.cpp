#include "appagent/core/json.hpp"

#include "appagent/core/errors.hpp"
#include "appagent/core/ops.hpp"

namespace appagent {

void throw_schema_error(const std::string& what) { throw SchemaError(what); }

std::string to_string(ModeHint m) {
  switch (m) {
    case ModeHint::kAuto:
      return "auto";
    case ModeHint::kShallow:
      return "shallow";
    case ModeHint::kDeep:
      return "deep";
  }
  return "auto";
}

std::string to_string(ExecMode m) { return m == ExecMode::kDeep ? "deep" : "shallow"; }

std::string to_string(PageKind k) {
  switch (k) {
    case PageKind::kHome:
      return "home";
    case PageKind::kResultsList:
      return "results_list";
    case PageKind::kContentPage:
      return "content_page";
  }
  return "home";
}

ModeHint parse_mode_hint(std::string_view s) {
  if (s == "auto") return ModeHint::kAuto;
  if (s == "shallow") return ModeHint::kShallow;
  if (s == "deep") return ModeHint::kDeep;
  throw SchemaError("unknown mode hint: " + std::string(s));
}

ExecMode parse_exec_mode(std::string_view s) {
  if (s == "shallow") return ExecMode::kShallow;
  if (s == "deep") return ExecMode::kDeep;
  throw SchemaError("unknown mode: " + std::string(s));
}

PageKind parse_page_kind(std::string_view s) {
  if (s == "home") return PageKind::kHome;
  if (s == "results_list") return PageKind::kResultsList;
  if (s == "content_page") return PageKind::kContentPage;
  throw SchemaError("unknown page kind: " + std::string(s));
}

void to_json(Json& j, const TaskRequest& v) {
  j = Json{{"task_id", v.task_id},
           {"query_text", v.query_text},
           {"mode_hint", to_string(v.mode_hint)},
           {"session_id", v.session_id},
           {"submitted_at", v.submitted_at}};
}

void from_json(const Json& j, TaskRequest& v) {
  j.at("task_id").get_to(v.task_id);
  j.at("query_text").get_to(v.query_text);
  v.mode_hint = parse_mode_hint(j.value("mode_hint", "auto"));
  v.session_id = j.value("session_id", "");
  v.submitted_at = j.value("submitted_at", Timestamp{0});
}

void to_json(Json& j, const SubTask& v) {
  j = Json{{"subtask_id", v.subtask_id},
           {"app_id", v.app_id},
           {"goal", v.goal},
           {"seed_query", v.seed_query},
           {"priority", v.priority}};
}

void from_json(const Json& j, SubTask& v) {
  j.at("subtask_id").get_to(v.subtask_id);
  j.at("app_id").get_to(v.app_id);
  v.goal = j.value("goal", "");
  j.at("seed_query").get_to(v.seed_query);
  j.at("priority").get_to(v.priority);
}

void to_json(Json& j, const ComprehensionPlan& v) {
  j = Json{{"needs_external", v.needs_external},
           {"rationale", v.rationale},
           {"base_answer", v.base_answer},
           {"subtasks", v.subtasks},
           {"mode", to_string(v.mode)}};
}

void from_json(const Json& j, ComprehensionPlan& v) {
  j.at("needs_external").get_to(v.needs_external);
  v.rationale = j.value("rationale", "");
  v.base_answer = j.value("base_answer", "");
  v.subtasks = j.value("subtasks", std::vector<SubTask>{});
  v.mode = parse_exec_mode(j.value("mode", "shallow"));
}

void to_json(Json& j, const AppAction& v) {
  j = Json{{"kind", action_kind_name(v)}};
  if (const auto* a = std::get_if<action::Launch>(&v)) j["app_id"] = a->app_id;
  if (const auto* a = std::get_if<action::Search>(&v)) j["query"] = a->query;
  if (const auto* a = std::get_if<action::OpenResult>(&v)) j["index"] = a->index;
}

void from_json(const Json& j, AppAction& v) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "launch") {
    v = action::Launch{j.at("app_id").get<std::string>()};
  } else if (kind == "search") {
    v = action::Search{j.at("query").get<std::string>()};
  } else if (kind == "open_result") {
    const int index = j.at("index").get<int>();
    if (index < 0) throw SchemaError("open_result index must be >= 0");
    v = action::OpenResult{index};
  } else if (kind == "extract_content") {
    v = action::ExtractContent{};
  } else if (kind == "screenshot") {
    v = action::Screenshot{};
  } else if (kind == "back") {
    v = action::Back{};
  } else {
    throw SchemaError("unknown action kind: " + kind);
  }
}

void to_json(Json& j, const Observation& v) {
  j = Json{{"page_kind", to_string(v.page_kind)}};
  if (v.result_titles) j["result_titles"] = *v.result_titles;
  if (v.content_text) j["content_text"] = *v.content_text;
  if (v.screenshot_ref) j["screenshot_ref"] = *v.screenshot_ref;
}

void from_json(const Json& j, Observation& v) {
  v.page_kind = parse_page_kind(j.at("page_kind").get<std::string>());
  v.result_titles.reset();
  v.content_text.reset();
  v.screenshot_ref.reset();
  if (j.contains("result_titles")) v.result_titles = j.at("result_titles").get<std::vector<std::string>>();
  if (j.contains("content_text")) v.content_text = j.at("content_text").get<std::string>();
  if (j.contains("screenshot_ref")) v.screenshot_ref = j.at("screenshot_ref").get<std::string>();
  if (!v.well_formed()) throw SchemaError("observation fields do not match page_kind");
}

void to_json(Json& j, const EvidenceItem& v) {
  j = Json{{"evidence_id", v.evidence_id},
           {"app_id", v.app_id},
           {"subquery", v.subquery},
           {"title", v.title},
           {"snippet", v.snippet},
           {"relevance", v.relevance},
           {"depth", v.depth},
           {"trace_indices", v.trace_indices},
           {"subtask_id", v.subtask_id},
           {"priority", v.priority}};
  if (v.screenshot_ref) j["screenshot_ref"] = *v.screenshot_ref;
}

void from_json(const Json& j, EvidenceItem& v) {
  j.at("evidence_id").get_to(v.evidence_id);
  j.at("app_id").get_to(v.app_id);
  j.at("subquery").get_to(v.subquery);
  j.at("title").get_to(v.title);
  v.snippet = j.value("snippet", "");
  v.screenshot_ref.reset();
  if (j.contains("screenshot_ref")) v.screenshot_ref = j.at("screenshot_ref").get<std::string>();
  j.at("relevance").get_to(v.relevance);
  j.at("depth").get_to(v.depth);
  j.at("trace_indices").get_to(v.trace_indices);
  v.subtask_id = j.value("subtask_id", "");
  v.priority = j.value("priority", 0);
}

void to_json(Json& j, const TraceStep& v) {
  j = Json{{"step_index", v.step_index},
           {"subtask_id", v.subtask_id},
           {"app_id", v.app_id},
           {"action", v.action},
           {"observation", v.observation},
           {"timestamp", v.timestamp}};
}

void from_json(const Json& j, TraceStep& v) {
  j.at("step_index").get_to(v.step_index);
  j.at("subtask_id").get_to(v.subtask_id);
  j.at("app_id").get_to(v.app_id);
  j.at("action").get_to(v.action);
  j.at("observation").get_to(v.observation);
  v.timestamp = j.value("timestamp", Timestamp{0});
}

void to_json(Json& j, const TraceCounters& v) {
  j = Json{{"actions_total", v.actions_total},
           {"pages_opened_per_subquery", v.pages_opened_per_subquery},
           {"rounds", v.rounds}};
}

void from_json(const Json& j, TraceCounters& v) {
  j.at("actions_total").get_to(v.actions_total);
  j.at("pages_opened_per_subquery").get_to(v.pages_opened_per_subquery);
  j.at("rounds").get_to(v.rounds);
}

void to_json(Json& j, const TraceFailure& v) {
  j = Json{{"subtask_id", v.subtask_id}, {"app_id", v.app_id}, {"message", v.message}};
}

void from_json(const Json& j, TraceFailure& v) {
  j.at("subtask_id").get_to(v.subtask_id);
  j.at("app_id").get_to(v.app_id);
  j.at("message").get_to(v.message);
}

void to_json(Json& j, const ExecutionTrace& v) {
  j = Json{{"task_id", v.task_id}, {"steps", v.steps}, {"counters", v.counters}, {"failures", v.failures}};
}

void from_json(const Json& j, ExecutionTrace& v) {
  j.at("task_id").get_to(v.task_id);
  j.at("steps").get_to(v.steps);
  j.at("counters").get_to(v.counters);
  v.failures = j.value("failures", std::vector<TraceFailure>{});
}

void to_json(Json& j, const SufficiencyJudgment& v) {
  Json subqueries = Json::array();
  for (const auto& [app, query] : v.new_subqueries) subqueries.push_back(Json{{"app_id", app}, {"query", query}});
  j = Json{{"sufficient", v.sufficient}, {"missing_aspects", v.missing_aspects}, {"new_subqueries", subqueries}};
}

void from_json(const Json& j, SufficiencyJudgment& v) {
  j.at("sufficient").get_to(v.sufficient);
  v.missing_aspects = j.value("missing_aspects", std::vector<std::string>{});
  v.new_subqueries.clear();
  for (const auto& sq : j.value("new_subqueries", Json::array())) {
    v.new_subqueries.emplace_back(sq.at("app_id").get<std::string>(), sq.at("query").get<std::string>());
  }
}

void to_json(Json& j, const Attachment& v) {
  j = Json{{"media_kind", v.media_kind}, {"bytes", base64_encode(v.bytes)}};
}

void from_json(const Json& j, Attachment& v) {
  j.at("media_kind").get_to(v.media_kind);
  v.bytes = base64_decode(j.at("bytes").get<std::string>());
}

void to_json(Json& j, const ResponseSection& v) {
  j = Json{{"heading", v.heading},
           {"body", v.body},
           {"evidence_ids", v.evidence_ids},
           {"attachment_refs", v.attachment_refs}};
}

void from_json(const Json& j, ResponseSection& v) {
  j.at("heading").get_to(v.heading);
  v.body = j.value("body", "");
  v.evidence_ids = j.value("evidence_ids", std::vector<std::string>{});
  v.attachment_refs = j.value("attachment_refs", std::vector<std::string>{});
}

void to_json(Json& j, const IntegratedResponse& v) {
  j = Json{{"task_id", v.task_id},
           {"summary", v.summary},
           {"sections", v.sections},
           {"attachments", v.attachments},
           {"provenance", v.provenance}};
}

void from_json(const Json& j, IntegratedResponse& v) {
  j.at("task_id").get_to(v.task_id);
  j.at("summary").get_to(v.summary);
  j.at("sections").get_to(v.sections);
  j.at("attachments").get_to(v.attachments);
  j.at("provenance").get_to(v.provenance);
}

void to_json(Json& j, const OperationDocument& v) {
  Json kinds = Json::array();
  for (auto k : v.observed_kinds) kinds.push_back(to_string(k));
  j = Json{{"signature", v.signature},
           {"app_id", v.app_id},
           {"action_summary", v.action_summary},
           {"observed_kinds", kinds},
           {"outcome_note", v.outcome_note},
           {"success", v.success},
           {"created_at", v.created_at},
           {"last_used_at", v.last_used_at},
           {"use_count", v.use_count}};
}

void from_json(const Json& j, OperationDocument& v) {
  j.at("signature").get_to(v.signature);
  j.at("app_id").get_to(v.app_id);
  j.at("action_summary").get_to(v.action_summary);
  v.observed_kinds.clear();
  for (const auto& k : j.value("observed_kinds", Json::array())) {
    v.observed_kinds.push_back(parse_page_kind(k.get<std::string>()));
  }
  j.at("outcome_note").get_to(v.outcome_note);
  j.at("success").get_to(v.success);
  j.at("created_at").get_to(v.created_at);
  j.at("last_used_at").get_to(v.last_used_at);
  j.at("use_count").get_to(v.use_count);
}

void to_json(Json& j, const Budgets& v) {
  j = Json{{"pages_per_subquery", v.pages_per_subquery},
           {"max_rounds", v.max_rounds},
           {"max_subqueries", v.max_subqueries},
           {"max_actions", v.max_actions},
           {"wall_time_limit", v.wall_time_limit.count()}};
}

void from_json(const Json& j, Budgets& v) {
  Budgets defaults;
  v.pages_per_subquery = j.value("pages_per_subquery", defaults.pages_per_subquery);
  v.max_rounds = j.value("max_rounds", defaults.max_rounds);
  v.max_subqueries = j.value("max_subqueries", defaults.max_subqueries);
  v.max_actions = j.value("max_actions", defaults.max_actions);
  v.wall_time_limit = std::chrono::milliseconds(j.value("wall_time_limit", defaults.wall_time_limit.count()));
}

}  // namespace appagent
