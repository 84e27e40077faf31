#pragma once

#include <map>
#include <string>
#include <vector>

#include "appagent/core/types.hpp"
#include "appagent/reasoning/port.hpp"

namespace appagent {

struct EngagedApp {
  std::string app_id;
  std::string display_name;
};

inline constexpr std::string_view kAdditionalFindingsHeading = "Additional findings";

/// Merges the base answer, evidence and screenshots into one response.
///
/// `evidence` must be sorted by evidence_order_key and `apps` lists the
/// engaged apps in sub-task priority order. The result has one section per
/// engaged app in that order, plus an "Additional findings" section for any
/// evidence the backend's section plan left out. If the plan is malformed the
/// deterministic fallback layout is used instead; BackendUnavailable
/// propagates.
IntegratedResponse integrate(const TaskRequest& request, const ComprehensionPlan& plan,
                             const std::vector<EvidenceItem>& evidence,
                             const std::map<std::string, Attachment>& attachments, ReasoningPort& reasoning,
                             const std::vector<EngagedApp>& apps);

/// Layout used when the backend's section plan cannot be used.
IntegratedResponse fallback_layout(const TaskRequest& request, const ComprehensionPlan& plan,
                                   const std::vector<EvidenceItem>& evidence,
                                   const std::map<std::string, Attachment>& attachments,
                                   const std::vector<EngagedApp>& apps);

/// Plain-text rendering: summary paragraph, then each section as a heading,
/// its body and attachment placeholders.
std::string render_text(const IntegratedResponse& response);

}  // namespace appagent
