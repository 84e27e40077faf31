#pragma once

#include <span>
#include <string>
#include <string_view>
#include <tuple>

#include "appagent/core/json.hpp"
#include "appagent/core/types.hpp"

namespace appagent {

/// Lowercase (ASCII only), collapse whitespace runs to one space, trim, and
/// strip trailing `?`, `!` and `.`. Idempotent.
std::string normalize_query(std::string_view text);

/// (originating sub-task priority, first trace index, evidence id).
using EvidenceOrderKey = std::tuple<int, int, std::string>;

EvidenceOrderKey evidence_order_key(const EvidenceItem& item);

/// Sorts in place by evidence_order_key.
void sort_evidence(std::vector<EvidenceItem>& items);

std::string sha256_hex(std::string_view bytes);

/// sha256_hex of the compact canonical serialization.
std::string canonical_digest(const Json& value);

/// The trace as digested: steps and counters, with timestamps and task id removed.
Json trace_digest_form(const ExecutionTrace& trace);

std::string trace_digest(const ExecutionTrace& trace);

/// Rebuilds actions_total and pages_opened_per_subquery from the steps.
/// `rounds` is copied from the stored counters; it counts judge calls, which
/// are not app steps.
TraceCounters recompute_counters(const ExecutionTrace& trace);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

/// Applies "key=value,..." overrides to `base`. Keys are the Budgets field
/// names or their short forms P, R, Q, A, T (T in milliseconds). Throws
/// std::invalid_argument on unknown keys, non-integers or non-positive values.
Budgets parse_budget_spec(std::string_view spec, Budgets base = {});

// Invariant checks. Each returns an empty string when the value is valid,
// otherwise a description of the first violation found.
std::string check_plan(const ComprehensionPlan& plan);
std::string check_evidence(const EvidenceItem& item);
std::string check_judgment(const SufficiencyJudgment& judgment);
std::string check_response(const IntegratedResponse& response);
std::string check_trace(const ExecutionTrace& trace);

}  // namespace appagent
