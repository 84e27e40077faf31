#include "appagent/core/ops.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>
#include <string>

#include <openssl/evp.h>

#include "appagent/core/errors.hpp"

namespace appagent {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_terminal_punct(char c) { return c == '?' || c == '!' || c == '.'; }

}  // namespace

std::string normalize_query(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  // "cat ?" strips to "cat " which needs another trim.
  while (!out.empty() && (is_terminal_punct(out.back()) || out.back() == ' ')) out.pop_back();
  return out;
}

EvidenceOrderKey evidence_order_key(const EvidenceItem& item) {
  const int first = item.trace_indices.empty() ? -1 : item.trace_indices.front();
  return {item.priority, first, item.evidence_id};
}

void sort_evidence(std::vector<EvidenceItem>& items) {
  std::sort(items.begin(), items.end(), [](const EvidenceItem& a, const EvidenceItem& b) {
    return evidence_order_key(a) < evidence_order_key(b);
  });
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string canonical_digest(const Json& value) { return sha256_hex(value.dump()); }

Json trace_digest_form(const ExecutionTrace& trace) {
  Json steps = Json::array();
  for (const auto& step : trace.steps) {
    Json s = step;
    s.erase("timestamp");
    steps.push_back(std::move(s));
  }
  return Json{{"steps", steps}, {"counters", trace.counters}, {"failures", trace.failures}};
}

std::string trace_digest(const ExecutionTrace& trace) { return canonical_digest(trace_digest_form(trace)); }

TraceCounters recompute_counters(const ExecutionTrace& trace) {
  TraceCounters c;
  c.actions_total = static_cast<int>(trace.steps.size());
  c.rounds = trace.counters.rounds;
  std::map<std::string, std::string> current_query;  // subtask_id -> normalized query
  for (const auto& step : trace.steps) {
    if (const auto* s = std::get_if<action::Search>(&step.action)) {
      const auto key = normalize_query(s->query);
      current_query[step.subtask_id] = key;
      c.pages_opened_per_subquery.try_emplace(key, 0);
    } else if (std::holds_alternative<action::OpenResult>(step.action)) {
      auto it = current_query.find(step.subtask_id);
      if (it != current_query.end()) ++c.pages_opened_per_subquery[it->second];
    }
  }
  return c;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw SchemaError("base64 length not a multiple of 4");
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw SchemaError("invalid base64");
  // EVP_DecodeBlock counts padding as zero bytes.
  size_t len = static_cast<size_t>(n);
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() >= 2 && text[text.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

std::string check_plan(const ComprehensionPlan& plan) {
  if (!plan.needs_external) {
    if (!plan.subtasks.empty()) return "needs_external=false but subtasks present";
    return {};
  }
  if (plan.subtasks.empty()) return "needs_external=true but no subtasks";
  for (size_t i = 0; i < plan.subtasks.size(); ++i) {
    const auto& st = plan.subtasks[i];
    if (normalize_query(st.seed_query).empty()) return "subtask " + st.subtask_id + " has empty seed_query";
    if (st.priority < 0) return "subtask " + st.subtask_id + " has negative priority";
    if (i > 0 && st.priority <= plan.subtasks[i - 1].priority) return "subtask priorities not strictly increasing";
  }
  return {};
}

std::string check_evidence(const EvidenceItem& item) {
  if (item.depth != 0 && item.depth != 1) return "evidence depth must be 0 or 1";
  if (item.trace_indices.empty()) return "evidence " + item.evidence_id + " has no trace indices";
  if (!(item.relevance >= 0.0 && item.relevance <= 1.0)) return "evidence relevance outside [0,1]";
  return {};
}

std::string check_judgment(const SufficiencyJudgment& judgment) {
  if (judgment.sufficient && !judgment.new_subqueries.empty()) return "sufficient judgment carries new sub-queries";
  for (const auto& [app, query] : judgment.new_subqueries) {
    if (app.empty()) return "new sub-query without app_id";
    if (normalize_query(query).empty()) return "empty new sub-query";
  }
  return {};
}

std::string check_response(const IntegratedResponse& response) {
  std::map<std::string, int> seen;
  for (size_t i = 0; i < response.sections.size(); ++i) {
    for (const auto& id : response.sections[i].evidence_ids) {
      if (!seen.emplace(id, static_cast<int>(i)).second) return "evidence " + id + " appears in two sections";
    }
    for (const auto& ref : response.sections[i].attachment_refs) {
      if (!response.attachments.contains(ref)) return "section references missing attachment " + ref;
    }
  }
  for (const auto& [id, section] : response.provenance) {
    auto it = seen.find(id);
    if (it == seen.end() || it->second != section) return "provenance of " + id + " does not match sections";
  }
  if (seen.size() != response.provenance.size()) return "section evidence missing from provenance";
  return {};
}

std::string check_trace(const ExecutionTrace& trace) {
  for (size_t i = 0; i < trace.steps.size(); ++i) {
    if (trace.steps[i].step_index != static_cast<int>(i)) return "step indices not dense from 0";
    if (!trace.steps[i].observation.well_formed()) return "malformed observation at step " + std::to_string(i);
  }
  if (!(recompute_counters(trace) == trace.counters)) return "stored counters differ from recomputed counters";
  return {};
}

Budgets parse_budget_spec(std::string_view spec, Budgets base) {
  size_t pos = 0;
  while (pos < spec.size()) {
    size_t end = spec.find(',', pos);
    if (end == std::string_view::npos) end = spec.size();
    const std::string_view item = spec.substr(pos, end - pos);
    pos = end + 1;
    if (item.empty()) continue;
    const size_t eq = item.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("budget override needs key=value: " + std::string(item));
    const std::string key(item.substr(0, eq));
    const std::string text(item.substr(eq + 1));
    long long value = 0;
    size_t used = 0;
    try {
      value = std::stoll(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() || value <= 0 || value > 1'000'000'000) {
      throw std::invalid_argument("budget " + key + " needs a positive integer, got '" + text + "'");
    }
    const int v = static_cast<int>(value);
    if (key == "P" || key == "pages_per_subquery") {
      base.pages_per_subquery = v;
    } else if (key == "R" || key == "max_rounds") {
      base.max_rounds = v;
    } else if (key == "Q" || key == "max_subqueries") {
      base.max_subqueries = v;
    } else if (key == "A" || key == "max_actions") {
      base.max_actions = v;
    } else if (key == "T" || key == "wall_time_limit") {
      base.wall_time_limit = std::chrono::milliseconds(value);
    } else {
      throw std::invalid_argument("unknown budget " + key);
    }
  }
  return base;
}

}  // namespace appagent
