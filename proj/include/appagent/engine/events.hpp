#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include "appagent/core/json.hpp"
#include "appagent/core/types.hpp"

namespace appagent {

enum class TaskPhase { kAccepted, kComprehending, kExecuting, kIntegrating, kDone, kFailed };

std::string to_string(TaskPhase p);

namespace event {
struct TaskAccepted {
  TaskRequest request;
};
struct ComprehensionDone {
  ComprehensionPlan plan;
};
struct SubTaskStarted {
  SubTask subtask;
};
struct ActionPerformed {
  TraceStep step;
};
struct EvidenceAdded {
  EvidenceItem item;
};
struct SufficiencyJudged {
  SufficiencyJudgment judgment;
  int round = 0;
};
struct IntegrationDone {
  int sections = 0;
};
struct TaskCompleted {
  bool persistence_warning = false;
};
struct TaskFailed {
  std::string error;  // error kind, snake_case
  std::string message;
};
}  // namespace event

using EventPayload = std::variant<event::TaskAccepted, event::ComprehensionDone, event::SubTaskStarted,
                                  event::ActionPerformed, event::EvidenceAdded, event::SufficiencyJudged,
                                  event::IntegrationDone, event::TaskCompleted, event::TaskFailed>;

struct EngineEvent {
  std::string task_id;
  int seq = 0;
  EventPayload payload;

  std::string kind() const;
  bool terminal() const;
};

void to_json(Json& j, const EngineEvent& e);

/// Append-only event log of one task, with replaying fan-out.
///
/// Pull readers call wait_from(); push subscribers get the backlog from
/// sequence 0 and then every later event exactly once, in order. A throwing
/// subscriber is dropped; it never affects the task.
class EventLog {
 public:
  using Subscriber = std::function<void(const EngineEvent&)>;

  explicit EventLog(std::string task_id);

  const std::string& task_id() const { return task_id_; }

  EngineEvent emit(EventPayload payload);

  std::vector<EngineEvent> snapshot(size_t from = 0) const;
  size_t size() const;

  /// Events from index `from`, blocking up to `timeout` for at least one when
  /// none are available yet. Returns empty on timeout or when the log is closed
  /// and fully read.
  std::vector<EngineEvent> wait_from(size_t from, std::chrono::milliseconds timeout) const;

  /// True once a TaskCompleted or TaskFailed has been appended.
  bool closed() const;

  void subscribe(Subscriber subscriber);

  TaskPhase phase() const;
  /// Phases only move forward; any phase may move to failed.
  void set_phase(TaskPhase phase);

 private:
  struct Sub {
    Subscriber fn;
    size_t next = 0;
    bool dropped = false;
  };

  void pump();

  std::string task_id_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<EngineEvent> events_;
  bool closed_ = false;
  TaskPhase phase_ = TaskPhase::kAccepted;

  std::mutex delivery_mu_;
  std::vector<Sub> subscribers_;
};

}  // namespace appagent
