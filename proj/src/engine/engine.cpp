#include "appagent/engine/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <queue>

#include "appagent/core/errors.hpp"
#include "appagent/core/harvest.hpp"
#include "appagent/core/ops.hpp"

namespace appagent {

std::string derive_task_id(std::string_view query, ModeHint mode) {
  return "task-" + sha256_hex(normalize_query(query) + "|" + to_string(mode)).substr(0, 12);
}

// ---------------------------------------------------------------------------
// Comprehension

ComprehensionPlan comprehend(const TaskRequest& request, ReasoningPort& reasoning,
                             const std::vector<AppDescriptor>& registry, const HistoryStore* history,
                             size_t hint_limit) {
  if (registry.empty()) throw std::invalid_argument("comprehend needs at least one registered app");
  std::vector<std::string> ids;
  for (const auto& d : registry) ids.push_back(d.app_id);
  std::vector<OperationDocument> hints;
  if (history != nullptr) hints = history->hints(request.query_text, ids, hint_limit);

  ComprehensionPlan plan = reasoning.assess(request, registry, hints);
  for (const auto& st : plan.subtasks) {
    if (std::find(ids.begin(), ids.end(), st.app_id) == ids.end()) {
      throw UnknownAppInPlan("plan sub-task " + st.subtask_id + " names unregistered app " + st.app_id);
    }
  }
  if (request.mode_hint == ModeHint::kShallow) plan.mode = ExecMode::kShallow;
  if (request.mode_hint == ModeHint::kDeep) plan.mode = ExecMode::kDeep;
  return plan;
}

// ---------------------------------------------------------------------------
// ExecutionContext

ExecutionContext::ExecutionContext(const TaskRequest& request, Ports ports, const Budgets& budgets, EventLog* events,
                                   EngineOptions options)
    : request_(request),
      ports_(ports),
      budgets_(budgets),
      events_(events),
      options_(options),
      registry_(ports.driver.apps()),
      started_(std::chrono::steady_clock::now()) {
  trace_.task_id = request.task_id;
}

std::vector<std::string> ExecutionContext::app_ids() const {
  std::vector<std::string> ids;
  for (const auto& d : registry_) ids.push_back(d.app_id);
  return ids;
}

const AppDescriptor* ExecutionContext::descriptor(const std::string& app_id) const {
  for (const auto& d : registry_) {
    if (d.app_id == app_id) return &d;
  }
  return nullptr;
}

bool ExecutionContext::actions_exhausted() const { return trace_.counters.actions_total >= budgets_.max_actions; }

std::chrono::milliseconds ExecutionContext::remaining() const {
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started_);
  return std::max(std::chrono::milliseconds{0}, budgets_.wall_time_limit - elapsed);
}

bool ExecutionContext::time_exhausted() const { return remaining().count() == 0; }

void ExecutionContext::emit(EventPayload payload) {
  if (events_ != nullptr) events_->emit(std::move(payload));
}

void ExecutionContext::begin_subtask(const SubTask& subtask) {
  auto [it, inserted] = app_priority_.try_emplace(subtask.app_id, subtask.priority);
  if (!inserted) it->second = std::min(it->second, subtask.priority);
  emit(event::SubTaskStarted{subtask});
}

Session ExecutionContext::open_session(const SubTask& subtask) {
  return Session(ports_.driver, subtask.app_id, std::min(options_.slot_wait, remaining()));
}

const TraceStep& ExecutionContext::append_step(TraceStep step) {
  step.step_index = static_cast<int>(trace_.steps.size());
  auto& counters = trace_.counters;
  ++counters.actions_total;
  if (const auto* s = std::get_if<action::Search>(&step.action)) {
    const auto key = normalize_query(s->query);
    search_key_[step.subtask_id] = key;
    counters.pages_opened_per_subquery.try_emplace(key, 0);
  } else if (std::holds_alternative<action::OpenResult>(step.action)) {
    if (auto it = search_key_.find(step.subtask_id); it != search_key_.end()) {
      ++counters.pages_opened_per_subquery[it->second];
    }
  }
  trace_.steps.push_back(std::move(step));
  emit(event::ActionPerformed{trace_.steps.back()});
  return trace_.steps.back();
}

const TraceStep* ExecutionContext::perform(Session& session, const SubTask& subtask, const AppAction& action) {
  if (actions_exhausted() || time_exhausted()) return nullptr;
  Observation obs = session.perform(action);
  if (obs.screenshot_ref) attachments_[*obs.screenshot_ref] = session.screenshot();
  return &append_step(TraceStep{0, subtask.subtask_id, subtask.app_id, action, std::move(obs), now_ms()});
}

void ExecutionContext::record_failure(const SubTask& subtask, const std::string& message) {
  trace_.failures.push_back(TraceFailure{subtask.subtask_id, subtask.app_id, message});
}

void ExecutionContext::add_evidence(std::vector<EvidenceItem> items) {
  for (auto& item : items) {
    char id[16];
    std::snprintf(id, sizeof id, "ev-%04d", next_evidence_++);
    item.evidence_id = id;
    evidence_.push_back(std::move(item));
    emit(event::EvidenceAdded{evidence_.back()});
  }
}

void ExecutionContext::count_round() { ++trace_.counters.rounds; }

void ExecutionContext::mark_executed(const std::string& normalized_query) {
  visited_.insert(normalized_query);
  ++executed_subqueries_;
}

void ExecutionContext::splice_replay(const ReplayResult& replay, const std::string& app_id, int priority) {
  const int offset = static_cast<int>(trace_.steps.size());
  std::string current_subtask;
  for (const auto& step : replay.steps) {
    if (step.subtask_id != current_subtask) {
      current_subtask = step.subtask_id;
      SubTask st{step.subtask_id, app_id, "replay of a recorded operation", "", priority};
      for (const auto& s : replay.steps) {
        const auto* search = std::get_if<action::Search>(&s.action);
        if (search != nullptr && s.subtask_id == step.subtask_id) {
          st.seed_query = search->query;
          break;
        }
      }
      if (!st.seed_query.empty()) visited_.insert(normalize_query(st.seed_query));
      begin_subtask(st);
    }
    append_step(step);
  }
  for (const auto& [ref, attachment] : replay.attachments) attachments_[ref] = attachment;
  std::vector<EvidenceItem> items = replay.evidence;
  for (auto& item : items) {
    for (int& idx : item.trace_indices) idx += offset;
  }
  add_evidence(std::move(items));
}

std::vector<EngagedApp> ExecutionContext::engaged_apps() const {
  std::vector<std::tuple<int, int, std::string>> order;
  for (const auto& step : trace_.steps) {
    const bool seen = std::any_of(order.begin(), order.end(), [&](const auto& t) { return std::get<2>(t) == step.app_id; });
    if (seen) continue;
    auto it = app_priority_.find(step.app_id);
    order.emplace_back(it == app_priority_.end() ? 0 : it->second, step.step_index, step.app_id);
  }
  std::sort(order.begin(), order.end());
  std::vector<EngagedApp> out;
  for (const auto& [priority, first, app] : order) {
    const AppDescriptor* d = descriptor(app);
    out.push_back(EngagedApp{app, d != nullptr ? d->display_name : app});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Executors

namespace {

bool has(const AppDescriptor* d, Capability c) { return d != nullptr && d->capabilities.contains(c); }

/// Runs one sub-task. Returns true when it ran to completion; false when a
/// budget cut it short or a driver error skipped it.
bool execute_subtask(ExecutionContext& ctx, const SubTask& subtask, bool deep) {
  ctx.begin_subtask(subtask);
  const size_t first_step = ctx.trace().steps.size();
  const AppDescriptor* app = ctx.descriptor(subtask.app_id);
  bool complete = true;
  try {
    Session session = ctx.open_session(subtask);
    auto act = [&](const AppAction& a) {
      const TraceStep* step = ctx.perform(session, subtask, a);
      complete = complete && step != nullptr;
      return step;
    };
    if (act(action::Launch{subtask.app_id}) == nullptr) return false;
    const TraceStep* search = act(action::Search{subtask.seed_query});
    if (search == nullptr) return false;
    const int results = static_cast<int>(search->observation.result_titles->size());

    if (deep && has(app, Capability::kOpen)) {
      const int pages = std::min(ctx.budgets().pages_per_subquery, results);
      for (int i = 0; i < pages && complete; ++i) {
        if (act(action::OpenResult{i}) == nullptr) break;
        if (has(app, Capability::kExtract) && act(action::ExtractContent{}) == nullptr) break;
        if (has(app, Capability::kScreenshot) && act(action::Screenshot{}) == nullptr) break;
        act(action::Back{});
      }
    } else if (has(app, Capability::kScreenshot)) {
      act(action::Screenshot{});
    }
  } catch (const DriverError& e) {
    ctx.record_failure(subtask, e.what());
    return false;
  }
  const auto& steps = ctx.trace().steps;
  std::span<const TraceStep> mine(steps.data() + first_step, steps.size() - first_step);
  ctx.add_evidence(harvest_evidence(mine, subtask.priority));
  return complete;
}

}  // namespace

void run_shallow(ExecutionContext& ctx, const ComprehensionPlan& plan) {
  for (const auto& subtask : plan.subtasks) {
    if (ctx.actions_exhausted() || ctx.time_exhausted()) break;
    ctx.mark_executed(normalize_query(subtask.seed_query));
    execute_subtask(ctx, subtask, /*deep=*/false);
  }
}

void run_deep(ExecutionContext& ctx, const ComprehensionPlan& plan, const std::set<std::string>& excluded_apps) {
  struct Pending {
    int priority;
    int seq;
    SubTask subtask;
    bool operator>(const Pending& o) const { return std::tie(priority, seq) > std::tie(o.priority, o.seq); }
  };
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> frontier;
  std::set<std::string> queued;
  int seq = 0;
  const Budgets& budgets = ctx.budgets();
  const auto ids = ctx.app_ids();

  auto push = [&](const std::string& app, const std::string& query, int priority, const std::string& goal) {
    const auto key = normalize_query(query);
    if (excluded_apps.contains(app) || ctx.visited().contains(key) || queued.contains(key)) return;
    queued.insert(key);
    ++seq;
    frontier.push(Pending{priority, seq, SubTask{"sq-" + std::to_string(seq), app, goal, query, priority}});
  };

  int fallback_priority = 0;
  for (const auto& st : plan.subtasks) fallback_priority = std::max(fallback_priority, st.priority + 1);
  for (const auto& [app, query] : ctx.ports().reasoning.expand(ctx.request(), plan, ids, budgets.max_subqueries)) {
    auto it = std::find_if(plan.subtasks.begin(), plan.subtasks.end(), [&](const SubTask& s) { return s.app_id == app; });
    if (it != plan.subtasks.end()) {
      push(app, query, it->priority, it->goal);
    } else {
      push(app, query, fallback_priority, "expanded sub-query");
    }
  }

  while (!frontier.empty()) {
    if (ctx.trace().counters.rounds >= budgets.max_rounds) break;
    if (ctx.executed_subqueries() >= budgets.max_subqueries) break;
    if (ctx.actions_exhausted() || ctx.time_exhausted()) break;

    Pending next = frontier.top();
    frontier.pop();
    const auto key = normalize_query(next.subtask.seed_query);
    queued.erase(key);
    if (ctx.visited().contains(key)) continue;
    ctx.mark_executed(key);

    if (!execute_subtask(ctx, next.subtask, /*deep=*/true)) continue;

    const SufficiencyJudgment judgment =
        ctx.ports().reasoning.judge(ctx.request(), ctx.evidence(), ids, ctx.trace().counters.rounds + 1);
    ctx.count_round();
    ctx.emit(event::SufficiencyJudged{judgment, ctx.trace().counters.rounds});
    if (judgment.sufficient) break;
    std::string goal = "follow-up";
    if (!judgment.missing_aspects.empty()) goal += ": " + judgment.missing_aspects.front();
    for (const auto& [app, query] : judgment.new_subqueries) push(app, query, next.priority + 1, goal);
  }
}

// ---------------------------------------------------------------------------
// run_task

namespace {

std::string trim_copy(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

TaskResult run_task(const TaskRequest& request, Ports ports, const Budgets& budgets, EventLog& events,
                    EngineOptions options) {
  TaskResult result;
  result.trace.task_id = request.task_id;
  events.emit(event::TaskAccepted{request});

  auto fail = [&](std::string kind, std::string message) {
    result.phase = TaskPhase::kFailed;
    result.error_kind = kind;
    result.error_message = message;
    events.set_phase(TaskPhase::kFailed);
    events.emit(event::TaskFailed{std::move(kind), std::move(message)});
  };

  try {
    if (trim_copy(request.query_text).empty()) throw std::invalid_argument("query_text is empty");
    if (!budgets.valid()) throw std::invalid_argument("budgets must all be positive");

    events.set_phase(TaskPhase::kComprehending);
    const auto registry = ports.driver.apps();
    ComprehensionPlan plan =
        comprehend(request, ports.reasoning, registry, ports.history, options.history_hint_limit);
    result.plan = plan;
    events.emit(event::ComprehensionDone{plan});

    ExecutionContext ctx(request, ports, budgets, &events, options);
    std::set<std::string> replayed;
    std::vector<std::string> replay_notes;
    if (plan.needs_external) {
      events.set_phase(TaskPhase::kExecuting);

      if (ports.history != nullptr && options.use_replay) {
        std::set<std::string> tried;
        for (const auto& st : plan.subtasks) {
          if (!tried.insert(st.app_id).second) continue;
          auto doc = ports.history->lookup(request.query_text, st.app_id);
          if (!doc) continue;
          ReplayResult rr = replay(*doc, ports.driver, st.priority, std::min(options.slot_wait, ctx.remaining()));
          result.replays.push_back(ReplayNote{st.app_id, rr.diverged, rr.divergence_step, rr.reason});
          if (rr.diverged) continue;
          ctx.splice_replay(rr, st.app_id, st.priority);
          replayed.insert(st.app_id);
          replay_notes.push_back(doc->outcome_note);
        }
      }

      ComprehensionPlan remaining = plan;
      std::erase_if(remaining.subtasks, [&](const SubTask& s) { return replayed.contains(s.app_id); });
      if (!remaining.subtasks.empty()) {
        if (plan.mode == ExecMode::kShallow) {
          run_shallow(ctx, remaining);
        } else {
          run_deep(ctx, plan, replayed);
        }
      }
    }

    events.set_phase(TaskPhase::kIntegrating);
    std::vector<EvidenceItem> evidence = ctx.evidence();
    sort_evidence(evidence);
    const auto apps = ctx.engaged_apps();
    result.response = integrate(request, plan, evidence, ctx.attachments(), ports.reasoning, apps);
    events.emit(event::IntegrationDone{static_cast<int>(result.response.sections.size())});
    result.evidence = std::move(evidence);
    result.trace = ctx.take_trace();

    events.set_phase(TaskPhase::kDone);
    result.phase = TaskPhase::kDone;
    if (ports.history != nullptr) {
      std::optional<std::string> reuse;
      const bool all_replayed =
          !apps.empty() && std::all_of(apps.begin(), apps.end(), [&](const EngagedApp& a) { return replayed.contains(a.app_id); });
      if (all_replayed) reuse = replay_notes.front();
      try {
        result.recorded = ports.history->record(request.query_text, result.trace, result.response, ports.reasoning, reuse);
      } catch (const StorageFailure&) {
        result.persistence_warning = true;
      }
    }
    events.emit(event::TaskCompleted{result.persistence_warning});
  } catch (const BackendUnavailable& e) {
    fail("backend_unavailable", e.what());
  } catch (const MalformedBackendOutput& e) {
    fail("malformed_backend_output", e.what());
  } catch (const UnknownAppInPlan& e) {
    fail("unknown_app_in_plan", e.what());
  } catch (const std::invalid_argument& e) {
    fail("bad_request", e.what());
  } catch (const std::exception& e) {
    fail("internal", e.what());
  }
  return result;
}

}  // namespace appagent
