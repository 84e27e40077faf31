#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace appagent {

/// Milliseconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

Timestamp now_ms();

enum class ModeHint { kAuto, kShallow, kDeep };
enum class ExecMode { kShallow, kDeep };

struct TaskRequest {
  std::string task_id;
  std::string query_text;
  ModeHint mode_hint = ModeHint::kAuto;
  std::string session_id;
  Timestamp submitted_at = 0;
};

struct SubTask {
  std::string subtask_id;
  std::string app_id;
  std::string goal;
  std::string seed_query;
  int priority = 0;  // 0 = highest
};

struct ComprehensionPlan {
  bool needs_external = false;
  std::string rationale;
  std::string base_answer;
  std::vector<SubTask> subtasks;
  ExecMode mode = ExecMode::kShallow;
};

// App action vocabulary. Every driver, real or simulated, speaks exactly this.
namespace action {
struct Launch {
  std::string app_id;
  bool operator==(const Launch&) const = default;
};
struct Search {
  std::string query;
  bool operator==(const Search&) const = default;
};
struct OpenResult {
  int index = 0;
  bool operator==(const OpenResult&) const = default;
};
struct ExtractContent {
  bool operator==(const ExtractContent&) const = default;
};
struct Screenshot {
  bool operator==(const Screenshot&) const = default;
};
struct Back {
  bool operator==(const Back&) const = default;
};
}  // namespace action

using AppAction = std::variant<action::Launch, action::Search, action::OpenResult,
                               action::ExtractContent, action::Screenshot, action::Back>;

std::string action_kind_name(const AppAction& a);

enum class PageKind { kHome, kResultsList, kContentPage };

struct Observation {
  PageKind page_kind = PageKind::kHome;
  std::optional<std::vector<std::string>> result_titles;  // iff results_list
  std::optional<std::string> content_text;                // iff content_page
  std::optional<std::string> screenshot_ref;

  static Observation home();
  static Observation results(std::vector<std::string> titles);
  static Observation content(std::string text);

  /// True when exactly the fields implied by page_kind are populated.
  bool well_formed() const;
  bool operator==(const Observation&) const = default;
};

struct EvidenceItem {
  std::string evidence_id;
  std::string app_id;
  std::string subquery;
  std::string title;
  std::string snippet;
  std::optional<std::string> screenshot_ref;
  double relevance = 0.0;
  int depth = 0;
  std::vector<int> trace_indices;
  // Originating sub-task; carried so ordering and provenance checks need no side table.
  std::string subtask_id;
  int priority = 0;
};

struct TraceStep {
  int step_index = 0;
  std::string subtask_id;
  std::string app_id;
  AppAction action;
  Observation observation;
  Timestamp timestamp = 0;
};

struct TraceCounters {
  int actions_total = 0;
  std::map<std::string, int> pages_opened_per_subquery;
  int rounds = 0;
  bool operator==(const TraceCounters&) const = default;
};

/// A driver error that was absorbed by the executor (the sub-task was skipped).
struct TraceFailure {
  std::string subtask_id;
  std::string app_id;
  std::string message;
};

struct ExecutionTrace {
  std::string task_id;
  std::vector<TraceStep> steps;
  TraceCounters counters;
  std::vector<TraceFailure> failures;
};

struct SufficiencyJudgment {
  bool sufficient = false;
  std::vector<std::string> missing_aspects;
  std::vector<std::pair<std::string, std::string>> new_subqueries;  // (app_id, query)
};

struct Attachment {
  std::string media_kind;
  std::string bytes;
  bool operator==(const Attachment&) const = default;
};

struct ResponseSection {
  std::string heading;
  std::string body;
  std::vector<std::string> evidence_ids;
  std::vector<std::string> attachment_refs;
};

struct IntegratedResponse {
  std::string task_id;
  std::string summary;
  std::vector<ResponseSection> sections;
  std::map<std::string, Attachment> attachments;
  std::map<std::string, int> provenance;  // evidence_id -> section index
};

struct OperationDocument {
  std::string signature;
  std::string app_id;
  std::vector<AppAction> action_summary;
  // Page kind observed after each action_summary entry; replay checks against it.
  std::vector<PageKind> observed_kinds;
  std::string outcome_note;
  bool success = false;
  Timestamp created_at = 0;
  Timestamp last_used_at = 0;
  int use_count = 0;
};

struct Budgets {
  int pages_per_subquery = 3;
  int max_rounds = 3;
  int max_subqueries = 8;
  int max_actions = 100;
  std::chrono::milliseconds wall_time_limit{120'000};

  bool valid() const;
};

}  // namespace appagent
