#pragma once

// Canonical JSON encoding of the core types. Objects are emitted with sorted
// keys (nlohmann::json's default std::map storage), so dump() of an encoded
// value is byte-stable and is what every digest is computed over.

#include <string>
#include <string_view>

#include <json.hpp>

#include "appagent/core/types.hpp"

namespace appagent {

using Json = nlohmann::json;

std::string to_string(ModeHint m);
std::string to_string(ExecMode m);
std::string to_string(PageKind k);
ModeHint parse_mode_hint(std::string_view s);
ExecMode parse_exec_mode(std::string_view s);
PageKind parse_page_kind(std::string_view s);

void to_json(Json& j, const TaskRequest& v);
void from_json(const Json& j, TaskRequest& v);
void to_json(Json& j, const SubTask& v);
void from_json(const Json& j, SubTask& v);
void to_json(Json& j, const ComprehensionPlan& v);
void from_json(const Json& j, ComprehensionPlan& v);
void to_json(Json& j, const AppAction& v);
void from_json(const Json& j, AppAction& v);
void to_json(Json& j, const Observation& v);
void from_json(const Json& j, Observation& v);
void to_json(Json& j, const EvidenceItem& v);
void from_json(const Json& j, EvidenceItem& v);
void to_json(Json& j, const TraceStep& v);
void from_json(const Json& j, TraceStep& v);
void to_json(Json& j, const TraceCounters& v);
void from_json(const Json& j, TraceCounters& v);
void to_json(Json& j, const TraceFailure& v);
void from_json(const Json& j, TraceFailure& v);
void to_json(Json& j, const ExecutionTrace& v);
void from_json(const Json& j, ExecutionTrace& v);
void to_json(Json& j, const SufficiencyJudgment& v);
void from_json(const Json& j, SufficiencyJudgment& v);
void to_json(Json& j, const Attachment& v);  // bytes are base64 encoded
void from_json(const Json& j, Attachment& v);
void to_json(Json& j, const ResponseSection& v);
void from_json(const Json& j, ResponseSection& v);
void to_json(Json& j, const IntegratedResponse& v);
void from_json(const Json& j, IntegratedResponse& v);
void to_json(Json& j, const OperationDocument& v);
void from_json(const Json& j, OperationDocument& v);
void to_json(Json& j, const Budgets& v);
void from_json(const Json& j, Budgets& v);

[[noreturn]] void throw_schema_error(const std::string& what);

/// Compact canonical text of a value.
template <typename T>
std::string canonical(const T& value) {
  return Json(value).dump();
}

/// Parse a canonical document; any shape mismatch surfaces as SchemaError.
template <typename T>
T decode(const Json& j) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw_schema_error(e.what());
  }
}

}  // namespace appagent

// AppAction is a std::variant, which argument-dependent lookup cannot reach.
template <>
struct nlohmann::adl_serializer<appagent::AppAction> {
  static void to_json(nlohmann::json& j, const appagent::AppAction& v) { appagent::to_json(j, v); }
  static void from_json(const nlohmann::json& j, appagent::AppAction& v) { appagent::from_json(j, v); }
};
