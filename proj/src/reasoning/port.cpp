#include "appagent/reasoning/port.hpp"

#include <algorithm>
#include <set>

#include "appagent/core/errors.hpp"
#include "appagent/core/ops.hpp"

namespace appagent {

std::string to_string(StimulusKind k) {
  switch (k) {
    case StimulusKind::kAssess:
      return "assess";
    case StimulusKind::kExpand:
      return "expand";
    case StimulusKind::kJudge:
      return "judge";
    case StimulusKind::kSynthesize:
      return "synthesize";
    case StimulusKind::kSummarize:
      return "summarize";
  }
  return "assess";
}

StimulusKind parse_stimulus_kind(std::string_view s) {
  if (s == "assess") return StimulusKind::kAssess;
  if (s == "expand") return StimulusKind::kExpand;
  if (s == "judge") return StimulusKind::kJudge;
  if (s == "synthesize") return StimulusKind::kSynthesize;
  if (s == "summarize") return StimulusKind::kSummarize;
  throw SchemaError("unknown stimulus kind: " + std::string(s));
}

std::string ReasoningStimulus::digest() const { return canonical_digest(payload); }

// ---------------------------------------------------------------------------
// Payloads

Json assess_payload(const TaskRequest& request, const std::vector<AppDescriptor>& apps,
                    const std::vector<OperationDocument>& history_hints) {
  Json japps = Json::array();
  for (const auto& a : apps) japps.push_back(a);
  return Json{{"query", request.query_text},
              {"mode_hint", to_string(request.mode_hint)},
              {"apps", japps},
              {"history_hints", history_hints}};
}

Json expand_payload(const TaskRequest& request, const ComprehensionPlan& plan, const std::vector<std::string>& app_ids,
                    int max_subqueries) {
  return Json{{"query", request.query_text}, {"plan", plan}, {"apps", app_ids}, {"max_subqueries", max_subqueries}};
}

Json judge_payload(const TaskRequest& request, const std::vector<EvidenceItem>& evidence,
                   const std::vector<std::string>& app_ids, int round) {
  return Json{{"query", request.query_text}, {"evidence", evidence}, {"apps", app_ids}, {"round", round}};
}

Json synthesize_payload(const TaskRequest& request, const std::string& base_answer,
                        const std::vector<EvidenceItem>& evidence) {
  return Json{{"query", request.query_text}, {"base_answer", base_answer}, {"evidence", evidence}};
}

Json summarize_payload(const ExecutionTrace& trace, const IntegratedResponse& outcome) {
  return Json{{"task_id", trace.task_id}, {"trace", trace_digest_form(trace)}, {"response", outcome}};
}

// ---------------------------------------------------------------------------
// Output validation

namespace {

[[noreturn]] void malformed(const std::string& what) { throw MalformedBackendOutput(what); }

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

ComprehensionPlan parse_plan_output(const Json& doc) {
  if (!doc.is_object()) malformed("plan must be a JSON object");
  ComprehensionPlan plan;
  try {
    plan.needs_external = doc.at("needs_external").get<bool>();
    plan.rationale = doc.value("rationale", "");
    plan.base_answer = doc.value("base_answer", "");
    plan.mode = parse_exec_mode(doc.value("mode", "shallow"));
    const Json subtasks = doc.value("subtasks", Json::array());
    for (size_t i = 0; i < subtasks.size(); ++i) {
      const Json& js = subtasks[i];
      SubTask st;
      st.subtask_id = js.value("subtask_id", "st-" + std::to_string(i + 1));
      st.app_id = js.at("app_id").get<std::string>();
      st.goal = js.value("goal", "");
      st.seed_query = js.at("seed_query").get<std::string>();
      st.priority = js.value("priority", static_cast<int>(i));
      plan.subtasks.push_back(std::move(st));
    }
  } catch (const Json::exception& e) {
    malformed(std::string("plan document: ") + e.what());
  } catch (const SchemaError& e) {
    malformed(std::string("plan document: ") + e.what());
  }
  if (auto err = check_plan(plan); !err.empty()) malformed("plan: " + err);
  if (!plan.needs_external && plan.base_answer.empty()) malformed("plan: direct answer without base_answer");
  return plan;
}

std::vector<SubQuery> parse_expand_output(const Json& doc, const std::vector<std::string>& app_ids,
                                          int max_subqueries) {
  std::vector<SubQuery> out;
  std::set<std::string> seen;
  try {
    for (const auto& js : doc.at("subqueries")) {
      SubQuery sq{js.at("app_id").get<std::string>(), js.at("query").get<std::string>()};
      const auto key = normalize_query(sq.second);
      if (key.empty()) malformed("expand: empty sub-query");
      if (!contains(app_ids, sq.first)) malformed("expand: unregistered app " + sq.first);
      if (seen.insert(key).second) out.push_back(std::move(sq));
    }
  } catch (const Json::exception& e) {
    malformed(std::string("expand document: ") + e.what());
  }
  if (out.empty()) malformed("expand: no sub-queries");
  if (static_cast<int>(out.size()) > max_subqueries) out.resize(static_cast<size_t>(max_subqueries));
  return out;
}

SufficiencyJudgment parse_judge_output(const Json& doc, const std::vector<std::string>& app_ids) {
  SufficiencyJudgment j;
  try {
    j = doc.get<SufficiencyJudgment>();
  } catch (const Json::exception& e) {
    malformed(std::string("judgment document: ") + e.what());
  }
  if (auto err = check_judgment(j); !err.empty()) malformed("judgment: " + err);
  for (const auto& [app, query] : j.new_subqueries) {
    if (!contains(app_ids, app)) malformed("judgment: unregistered app " + app);
  }
  return j;
}

Synthesis parse_synthesis_output(const Json& doc, const std::vector<EvidenceItem>& evidence) {
  Synthesis s;
  std::set<std::string> known;
  for (const auto& e : evidence) known.insert(e.evidence_id);
  std::set<std::string> used;
  try {
    s.summary = doc.at("summary").get<std::string>();
    for (const auto& js : doc.value("sections", Json::array())) {
      SectionPlan sp;
      sp.app_id = js.at("app_id").get<std::string>();
      sp.heading = js.value("heading", sp.app_id);
      sp.body = js.value("body", "");
      sp.evidence_ids = js.value("evidence_ids", std::vector<std::string>{});
      for (const auto& id : sp.evidence_ids) {
        if (!known.contains(id)) malformed("synthesis cites unknown evidence " + id);
        if (!used.insert(id).second) malformed("synthesis cites evidence " + id + " twice");
      }
      s.sections.push_back(std::move(sp));
    }
  } catch (const Json::exception& e) {
    malformed(std::string("synthesis document: ") + e.what());
  }
  if (s.summary.empty()) malformed("synthesis: empty summary");
  return s;
}

std::string clamp_note(std::string note) {
  if (note.size() <= kMaxOutcomeNoteChars) return note;
  size_t cut = kMaxOutcomeNoteChars - 3;
  while (cut > 0 && (static_cast<unsigned char>(note[cut]) & 0xC0) == 0x80) --cut;
  note.resize(cut);
  return note + "...";
}

std::string parse_summary_output(const Json& doc) {
  std::string note;
  try {
    note = doc.at("note").get<std::string>();
  } catch (const Json::exception& e) {
    malformed(std::string("summary document: ") + e.what());
  }
  if (note.empty()) malformed("summary: empty note");
  return clamp_note(std::move(note));
}

// ---------------------------------------------------------------------------
// DocumentBackend

template <typename Parse>
auto DocumentBackend::call(const ReasoningStimulus& stimulus, Parse parse) {
  try {
    return parse(complete(stimulus, std::nullopt));
  } catch (const ScriptMiss&) {
    throw;
  } catch (const MalformedBackendOutput& e) {
    if (!supports_repair()) throw;
    return parse(complete(stimulus, std::string(e.what())));
  }
}

ComprehensionPlan DocumentBackend::assess(const TaskRequest& request, const std::vector<AppDescriptor>& apps,
                                          const std::vector<OperationDocument>& history_hints) {
  ReasoningStimulus stim{StimulusKind::kAssess, assess_payload(request, apps, history_hints)};
  return call(stim, [](const Json& doc) { return parse_plan_output(doc); });
}

std::vector<SubQuery> DocumentBackend::expand(const TaskRequest& request, const ComprehensionPlan& plan,
                                              const std::vector<std::string>& app_ids, int max_subqueries) {
  ReasoningStimulus stim{StimulusKind::kExpand, expand_payload(request, plan, app_ids, max_subqueries)};
  return call(stim, [&](const Json& doc) { return parse_expand_output(doc, app_ids, max_subqueries); });
}

SufficiencyJudgment DocumentBackend::judge(const TaskRequest& request, const std::vector<EvidenceItem>& evidence,
                                           const std::vector<std::string>& app_ids, int round) {
  ReasoningStimulus stim{StimulusKind::kJudge, judge_payload(request, evidence, app_ids, round)};
  return call(stim, [&](const Json& doc) { return parse_judge_output(doc, app_ids); });
}

Synthesis DocumentBackend::synthesize(const TaskRequest& request, const std::string& base_answer,
                                      const std::vector<EvidenceItem>& evidence) {
  if (evidence.empty()) {
    return Synthesis{base_answer.empty() ? "No additional information was found for: " + request.query_text
                                         : base_answer,
                     {}};
  }
  ReasoningStimulus stim{StimulusKind::kSynthesize, synthesize_payload(request, base_answer, evidence)};
  return call(stim, [&](const Json& doc) { return parse_synthesis_output(doc, evidence); });
}

std::string DocumentBackend::summarize_task(const ExecutionTrace& trace, const IntegratedResponse& outcome) {
  ReasoningStimulus stim{StimulusKind::kSummarize, summarize_payload(trace, outcome)};
  return call(stim, [](const Json& doc) { return parse_summary_output(doc); });
}

// ---------------------------------------------------------------------------
// RecordingPort

void RecordingPort::note(StimulusKind kind) {
  std::lock_guard lock(mu_);
  calls_.push_back(kind);
}

ComprehensionPlan RecordingPort::assess(const TaskRequest& request, const std::vector<AppDescriptor>& apps,
                                        const std::vector<OperationDocument>& history_hints) {
  note(StimulusKind::kAssess);
  return inner_.assess(request, apps, history_hints);
}

std::vector<SubQuery> RecordingPort::expand(const TaskRequest& request, const ComprehensionPlan& plan,
                                            const std::vector<std::string>& app_ids, int max_subqueries) {
  note(StimulusKind::kExpand);
  return inner_.expand(request, plan, app_ids, max_subqueries);
}

SufficiencyJudgment RecordingPort::judge(const TaskRequest& request, const std::vector<EvidenceItem>& evidence,
                                         const std::vector<std::string>& app_ids, int round) {
  note(StimulusKind::kJudge);
  return inner_.judge(request, evidence, app_ids, round);
}

Synthesis RecordingPort::synthesize(const TaskRequest& request, const std::string& base_answer,
                                    const std::vector<EvidenceItem>& evidence) {
  note(StimulusKind::kSynthesize);
  return inner_.synthesize(request, base_answer, evidence);
}

std::string RecordingPort::summarize_task(const ExecutionTrace& trace, const IntegratedResponse& outcome) {
  note(StimulusKind::kSummarize);
  return inner_.summarize_task(trace, outcome);
}

std::vector<StimulusKind> RecordingPort::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

size_t RecordingPort::count(StimulusKind kind) const {
  std::lock_guard lock(mu_);
  return static_cast<size_t>(std::count(calls_.begin(), calls_.end(), kind));
}

}  // namespace appagent
