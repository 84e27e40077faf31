#pragma once

#include <span>
#include <vector>

#include "appagent/core/types.hpp"

namespace appagent {

/// Derives evidence from a run of trace steps.
///
/// Each Search starts a block that ends at the next Search or Launch. A block
/// with OpenResult steps yields one depth-1 item per opened result (snippet
/// from ExtractContent, screenshot from a Screenshot on that page). A block
/// without any yields one depth-0 item per result title, the results-page
/// screenshot attached to the top title. Relevance is 1/(1+position) in both.
///
/// Items get no evidence_id; trace_indices are the steps' step_index values.
std::vector<EvidenceItem> harvest_evidence(std::span<const TraceStep> steps, int priority);

}  // namespace appagent
