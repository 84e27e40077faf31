#include "appagent/engine/events.hpp"

#include <stdexcept>

namespace appagent {

std::string to_string(TaskPhase p) {
  switch (p) {
    case TaskPhase::kAccepted:
      return "accepted";
    case TaskPhase::kComprehending:
      return "comprehending";
    case TaskPhase::kExecuting:
      return "executing";
    case TaskPhase::kIntegrating:
      return "integrating";
    case TaskPhase::kDone:
      return "done";
    case TaskPhase::kFailed:
      return "failed";
  }
  return "accepted";
}

std::string EngineEvent::kind() const {
  struct Visitor {
    std::string operator()(const event::TaskAccepted&) const { return "task_accepted"; }
    std::string operator()(const event::ComprehensionDone&) const { return "comprehension_done"; }
    std::string operator()(const event::SubTaskStarted&) const { return "subtask_started"; }
    std::string operator()(const event::ActionPerformed&) const { return "action_performed"; }
    std::string operator()(const event::EvidenceAdded&) const { return "evidence_added"; }
    std::string operator()(const event::SufficiencyJudged&) const { return "sufficiency_judged"; }
    std::string operator()(const event::IntegrationDone&) const { return "integration_done"; }
    std::string operator()(const event::TaskCompleted&) const { return "task_completed"; }
    std::string operator()(const event::TaskFailed&) const { return "task_failed"; }
  };
  return std::visit(Visitor{}, payload);
}

bool EngineEvent::terminal() const {
  return std::holds_alternative<event::TaskCompleted>(payload) || std::holds_alternative<event::TaskFailed>(payload);
}

void to_json(Json& j, const EngineEvent& e) {
  j = Json{{"task_id", e.task_id}, {"seq", e.seq}, {"kind", e.kind()}};
  std::visit(
      [&j](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, event::TaskAccepted>) j["request"] = p.request;
        if constexpr (std::is_same_v<T, event::ComprehensionDone>) j["plan"] = p.plan;
        if constexpr (std::is_same_v<T, event::SubTaskStarted>) j["subtask"] = p.subtask;
        if constexpr (std::is_same_v<T, event::ActionPerformed>) j["step"] = p.step;
        if constexpr (std::is_same_v<T, event::EvidenceAdded>) j["item"] = p.item;
        if constexpr (std::is_same_v<T, event::SufficiencyJudged>) {
          j["judgment"] = p.judgment;
          j["round"] = p.round;
        }
        if constexpr (std::is_same_v<T, event::IntegrationDone>) j["sections"] = p.sections;
        if constexpr (std::is_same_v<T, event::TaskCompleted>) j["persistence_warning"] = p.persistence_warning;
        if constexpr (std::is_same_v<T, event::TaskFailed>) {
          j["error"] = p.error;
          j["message"] = p.message;
        }
      },
      e.payload);
}

EventLog::EventLog(std::string task_id) : task_id_(std::move(task_id)) {}

EngineEvent EventLog::emit(EventPayload payload) {
  EngineEvent ev;
  {
    std::lock_guard lock(mu_);
    if (closed_) throw std::logic_error("event emitted after terminal event for " + task_id_);
    ev = EngineEvent{task_id_, static_cast<int>(events_.size()), std::move(payload)};
    events_.push_back(ev);
    closed_ = ev.terminal();
  }
  cv_.notify_all();
  pump();
  return ev;
}

std::vector<EngineEvent> EventLog::snapshot(size_t from) const {
  std::lock_guard lock(mu_);
  if (from >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(from), events_.end()};
}

size_t EventLog::size() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

std::vector<EngineEvent> EventLog::wait_from(size_t from, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return events_.size() > from || closed_; });
  if (from >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(from), events_.end()};
}

bool EventLog::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

void EventLog::subscribe(Subscriber subscriber) {
  {
    std::lock_guard lock(delivery_mu_);
    subscribers_.push_back(Sub{std::move(subscriber), 0, false});
  }
  pump();
}

void EventLog::pump() {
  std::lock_guard delivery(delivery_mu_);
  for (auto& sub : subscribers_) {
    while (!sub.dropped) {
      EngineEvent ev;
      {
        std::lock_guard lock(mu_);
        if (sub.next >= events_.size()) break;
        ev = events_[sub.next];
      }
      ++sub.next;
      try {
        sub.fn(ev);
      } catch (...) {
        sub.dropped = true;
      }
    }
  }
}

TaskPhase EventLog::phase() const {
  std::lock_guard lock(mu_);
  return phase_;
}

void EventLog::set_phase(TaskPhase phase) {
  std::lock_guard lock(mu_);
  if (phase_ == TaskPhase::kFailed || phase_ == TaskPhase::kDone) {
    throw std::logic_error("phase change after task finished");
  }
  if (phase != TaskPhase::kFailed && static_cast<int>(phase) < static_cast<int>(phase_)) {
    throw std::logic_error("phase moved backwards: " + to_string(phase_) + " -> " + to_string(phase));
  }
  phase_ = phase;
}

}  // namespace appagent
