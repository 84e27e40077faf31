#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "appagent/appdriver/port.hpp"
#include "appagent/core/types.hpp"
#include "appagent/engine/events.hpp"
#include "appagent/history/store.hpp"
#include "appagent/integrate/integrate.hpp"
#include "appagent/reasoning/port.hpp"

namespace appagent {

struct Ports {
  ReasoningPort& reasoning;
  AppDriver& driver;
  HistoryStore* history = nullptr;
};

struct EngineOptions {
  size_t history_hint_limit = 3;
  // Longest wait for a free device slot; never more than the remaining wall time.
  std::chrono::milliseconds slot_wait{30'000};
  bool use_replay = true;
};

struct ReplayNote {
  std::string app_id;
  bool diverged = false;
  int divergence_step = -1;
  std::string reason;
};

struct TaskResult {
  TaskPhase phase = TaskPhase::kAccepted;
  std::optional<ComprehensionPlan> plan;
  IntegratedResponse response;
  ExecutionTrace trace;
  std::vector<EvidenceItem> evidence;  // sorted by evidence_order_key
  std::vector<OperationDocument> recorded;
  std::vector<ReplayNote> replays;
  bool persistence_warning = false;
  std::string error_kind;  // set when phase == failed
  std::string error_message;
};

/// Stable task id for a query and mode hint: "task-" + 12 hex digits.
std::string derive_task_id(std::string_view query, ModeHint mode);

/// Runs comprehension, execution and integration for one request, emitting
/// every step to `events`. Backend and validation errors end the task with
/// TaskFailed (phase failed); exhausting a budget does not.
TaskResult run_task(const TaskRequest& request, Ports ports, const Budgets& budgets, EventLog& events,
                    EngineOptions options = {});

/// Asks the backend for a plan with up to `hint_limit` history documents,
/// applies the request's mode hint, and rejects sub-tasks naming apps that
/// are not in `registry` (UnknownAppInPlan).
ComprehensionPlan comprehend(const TaskRequest& request, ReasoningPort& reasoning,
                             const std::vector<AppDescriptor>& registry, const HistoryStore* history,
                             size_t hint_limit = 3);

/// Mutable state of one task's execution phase: the trace, evidence,
/// attachments and budgets. Shared by the shallow and deep executors.
class ExecutionContext {
 public:
  ExecutionContext(const TaskRequest& request, Ports ports, const Budgets& budgets, EventLog* events,
                   EngineOptions options = {});

  const TaskRequest& request() const { return request_; }
  const Budgets& budgets() const { return budgets_; }
  Ports& ports() { return ports_; }
  const std::vector<AppDescriptor>& registry() const { return registry_; }
  std::vector<std::string> app_ids() const;
  const AppDescriptor* descriptor(const std::string& app_id) const;

  const ExecutionTrace& trace() const { return trace_; }
  const std::vector<EvidenceItem>& evidence() const { return evidence_; }
  const std::map<std::string, Attachment>& attachments() const { return attachments_; }
  std::set<std::string>& visited() { return visited_; }
  int executed_subqueries() const { return executed_subqueries_; }

  bool actions_exhausted() const;
  bool time_exhausted() const;
  std::chrono::milliseconds remaining() const;

  void emit(EventPayload payload);

  /// Starts a sub-task: emits SubTaskStarted and tracks its app's priority.
  void begin_subtask(const SubTask& subtask);
  Session open_session(const SubTask& subtask);
  /// Performs and records one action. Returns nullptr without acting when
  /// the action or wall-time budget is spent. Driver errors propagate.
  const TraceStep* perform(Session& session, const SubTask& subtask, const AppAction& action);
  void record_failure(const SubTask& subtask, const std::string& message);
  /// Assigns evidence ids, appends and emits EvidenceAdded for each item.
  void add_evidence(std::vector<EvidenceItem> items);
  void count_round();
  void mark_executed(const std::string& normalized_query);

  /// Appends a successful replay fragment, re-indexing its steps.
  void splice_replay(const ReplayResult& replay, const std::string& app_id, int priority);

  /// Apps with at least one step, ordered by (lowest sub-task priority, first step).
  std::vector<EngagedApp> engaged_apps() const;

  ExecutionTrace take_trace() { return std::move(trace_); }

 private:
  const TraceStep& append_step(TraceStep step);

  const TaskRequest& request_;
  Ports ports_;
  Budgets budgets_;
  EventLog* events_;
  EngineOptions options_;
  std::vector<AppDescriptor> registry_;
  std::chrono::steady_clock::time_point started_;

  ExecutionTrace trace_;
  std::vector<EvidenceItem> evidence_;
  std::map<std::string, Attachment> attachments_;
  std::set<std::string> visited_;
  std::map<std::string, std::string> search_key_;  // subtask_id -> normalized query of its last Search
  std::map<std::string, int> app_priority_;
  int next_evidence_ = 1;
  int executed_subqueries_ = 0;
};

/// Per sub-task: Launch, Search(seed_query), Screenshot. Titles only.
void run_shallow(ExecutionContext& ctx, const ComprehensionPlan& plan);

/// Expand, then loop: pop the best sub-query, open up to P results, judge;
/// stop on sufficiency or when any budget or the frontier runs out.
/// Sub-queries for `excluded_apps` are dropped.
void run_deep(ExecutionContext& ctx, const ComprehensionPlan& plan, const std::set<std::string>& excluded_apps = {});

}  // namespace appagent
