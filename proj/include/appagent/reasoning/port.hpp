#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "appagent/appdriver/port.hpp"
#include "appagent/core/json.hpp"
#include "appagent/core/types.hpp"

namespace appagent {

enum class StimulusKind { kAssess, kExpand, kJudge, kSynthesize, kSummarize };

std::string to_string(StimulusKind k);
StimulusKind parse_stimulus_kind(std::string_view s);

/// One call into the reasoning backend. The payload is the canonical encoding
/// of the call's inputs, so equal inputs give byte-equal payloads.
struct ReasoningStimulus {
  StimulusKind kind;
  Json payload;

  std::string digest() const;
};

using SubQuery = std::pair<std::string, std::string>;  // (app_id, query)

struct SectionPlan {
  std::string app_id;
  std::string heading;
  std::string body;
  std::vector<std::string> evidence_ids;
};

struct Synthesis {
  std::string summary;
  std::vector<SectionPlan> sections;
};

inline constexpr size_t kMaxOutcomeNoteChars = 2000;

/// The reasoning backend port. Implementations must be callable from several
/// tasks at once.
class ReasoningPort {
 public:
  virtual ~ReasoningPort() = default;

  virtual ComprehensionPlan assess(const TaskRequest& request, const std::vector<AppDescriptor>& apps,
                                   const std::vector<OperationDocument>& history_hints) = 0;

  /// 1..max_subqueries sub-queries, normalized-unique, first occurrence kept.
  virtual std::vector<SubQuery> expand(const TaskRequest& request, const ComprehensionPlan& plan,
                                       const std::vector<std::string>& app_ids, int max_subqueries) = 0;

  virtual SufficiencyJudgment judge(const TaskRequest& request, const std::vector<EvidenceItem>& evidence,
                                    const std::vector<std::string>& app_ids, int round) = 0;

  /// With no evidence this is a pass-through: summary = base_answer, no sections.
  virtual Synthesis synthesize(const TaskRequest& request, const std::string& base_answer,
                               const std::vector<EvidenceItem>& evidence) = 0;

  /// Non-empty note of at most kMaxOutcomeNoteChars bytes.
  virtual std::string summarize_task(const ExecutionTrace& trace, const IntegratedResponse& outcome) = 0;
};

// Stimulus payloads, shared by every document-based backend.
Json assess_payload(const TaskRequest& request, const std::vector<AppDescriptor>& apps,
                    const std::vector<OperationDocument>& history_hints);
Json expand_payload(const TaskRequest& request, const ComprehensionPlan& plan, const std::vector<std::string>& app_ids,
                    int max_subqueries);
Json judge_payload(const TaskRequest& request, const std::vector<EvidenceItem>& evidence,
                   const std::vector<std::string>& app_ids, int round);
Json synthesize_payload(const TaskRequest& request, const std::string& base_answer,
                        const std::vector<EvidenceItem>& evidence);
Json summarize_payload(const ExecutionTrace& trace, const IntegratedResponse& outcome);

/// Validating parsers for backend output documents. Every invariant
/// violation throws MalformedBackendOutput.
ComprehensionPlan parse_plan_output(const Json& doc);
std::vector<SubQuery> parse_expand_output(const Json& doc, const std::vector<std::string>& app_ids,
                                          int max_subqueries);
SufficiencyJudgment parse_judge_output(const Json& doc, const std::vector<std::string>& app_ids);
Synthesis parse_synthesis_output(const Json& doc, const std::vector<EvidenceItem>& evidence);
std::string parse_summary_output(const Json& doc);

/// Truncates to kMaxOutcomeNoteChars with a trailing "..." marker, never
/// splitting a UTF-8 sequence.
std::string clamp_note(std::string note);

/// Base for backends that answer each stimulus with a JSON document. Builds
/// stimuli, validates replies, and performs the single repair retry when the
/// backend supports it.
class DocumentBackend : public ReasoningPort {
 public:
  ComprehensionPlan assess(const TaskRequest& request, const std::vector<AppDescriptor>& apps,
                           const std::vector<OperationDocument>& history_hints) override;
  std::vector<SubQuery> expand(const TaskRequest& request, const ComprehensionPlan& plan,
                               const std::vector<std::string>& app_ids, int max_subqueries) override;
  SufficiencyJudgment judge(const TaskRequest& request, const std::vector<EvidenceItem>& evidence,
                            const std::vector<std::string>& app_ids, int round) override;
  Synthesis synthesize(const TaskRequest& request, const std::string& base_answer,
                       const std::vector<EvidenceItem>& evidence) override;
  std::string summarize_task(const ExecutionTrace& trace, const IntegratedResponse& outcome) override;

 protected:
  /// Produces the raw output document. `repair_hint` carries the validation
  /// error of the previous reply on the repair attempt.
  virtual Json complete(const ReasoningStimulus& stimulus, const std::optional<std::string>& repair_hint) = 0;
  virtual bool supports_repair() const { return false; }

 private:
  template <typename Parse>
  auto call(const ReasoningStimulus& stimulus, Parse parse);
};

/// Decorator that records the kind of every call, in order.
class RecordingPort : public ReasoningPort {
 public:
  explicit RecordingPort(ReasoningPort& inner) : inner_(inner) {}

  ComprehensionPlan assess(const TaskRequest& request, const std::vector<AppDescriptor>& apps,
                           const std::vector<OperationDocument>& history_hints) override;
  std::vector<SubQuery> expand(const TaskRequest& request, const ComprehensionPlan& plan,
                               const std::vector<std::string>& app_ids, int max_subqueries) override;
  SufficiencyJudgment judge(const TaskRequest& request, const std::vector<EvidenceItem>& evidence,
                            const std::vector<std::string>& app_ids, int round) override;
  Synthesis synthesize(const TaskRequest& request, const std::string& base_answer,
                       const std::vector<EvidenceItem>& evidence) override;
  std::string summarize_task(const ExecutionTrace& trace, const IntegratedResponse& outcome) override;

  std::vector<StimulusKind> calls() const;
  size_t count(StimulusKind kind) const;

 private:
  void note(StimulusKind kind);

  ReasoningPort& inner_;
  mutable std::mutex mu_;
  std::vector<StimulusKind> calls_;
};

}  // namespace appagent
