#include "appagent/integrate/integrate.hpp"

#include <algorithm>
#include <set>

#include "appagent/core/errors.hpp"

namespace appagent {

namespace {

constexpr size_t kSnippetExcerpt = 160;

std::string excerpt(const std::string& text) {
  if (text.size() <= kSnippetExcerpt) return text;
  size_t cut = kSnippetExcerpt;
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  return text.substr(0, cut) + "...";
}

struct SectionSpec {
  std::string heading;
  std::string body;
  std::vector<const EvidenceItem*> items;
};

IntegratedResponse assemble(const std::string& task_id, std::string summary, const std::vector<SectionSpec>& specs,
                            const std::map<std::string, Attachment>& attachments) {
  IntegratedResponse r;
  r.task_id = task_id;
  r.summary = std::move(summary);
  for (const auto& spec : specs) {
    ResponseSection section;
    section.heading = spec.heading;
    std::string lines;
    for (const EvidenceItem* e : spec.items) {
      section.evidence_ids.push_back(e->evidence_id);
      r.provenance[e->evidence_id] = static_cast<int>(r.sections.size());
      lines += (lines.empty() ? "- " : "\n- ") + e->title;
      if (!e->snippet.empty()) lines += ": " + excerpt(e->snippet);
      if (e->screenshot_ref) {
        auto it = attachments.find(*e->screenshot_ref);
        const auto& refs = section.attachment_refs;
        if (it != attachments.end() && std::find(refs.begin(), refs.end(), it->first) == refs.end()) {
          section.attachment_refs.push_back(it->first);
          r.attachments.emplace(it->first, it->second);
        }
      }
    }
    section.body = spec.body;
    if (!section.body.empty() && !lines.empty()) section.body += "\n\n";
    section.body += lines;
    r.sections.push_back(std::move(section));
  }
  return r;
}

std::string fallback_summary(const TaskRequest& request, const ComprehensionPlan& plan) {
  return plan.base_answer.empty() ? "Findings for: " + request.query_text : plan.base_answer;
}

}  // namespace

IntegratedResponse fallback_layout(const TaskRequest& request, const ComprehensionPlan& plan,
                                   const std::vector<EvidenceItem>& evidence,
                                   const std::map<std::string, Attachment>& attachments,
                                   const std::vector<EngagedApp>& apps) {
  std::vector<SectionSpec> specs;
  std::set<std::string> covered;
  for (const auto& app : apps) {
    SectionSpec spec{app.display_name, "", {}};
    for (const auto& e : evidence) {
      if (e.app_id == app.app_id) spec.items.push_back(&e);
    }
    covered.insert(app.app_id);
    specs.push_back(std::move(spec));
  }
  SectionSpec tail{std::string(kAdditionalFindingsHeading), "", {}};
  for (const auto& e : evidence) {
    if (!covered.contains(e.app_id)) tail.items.push_back(&e);
  }
  if (!tail.items.empty()) specs.push_back(std::move(tail));
  return assemble(request.task_id, fallback_summary(request, plan), specs, attachments);
}

IntegratedResponse integrate(const TaskRequest& request, const ComprehensionPlan& plan,
                             const std::vector<EvidenceItem>& evidence,
                             const std::map<std::string, Attachment>& attachments, ReasoningPort& reasoning,
                             const std::vector<EngagedApp>& apps) {
  Synthesis synthesis;
  try {
    synthesis = reasoning.synthesize(request, plan.base_answer, evidence);
  } catch (const MalformedBackendOutput&) {
    return fallback_layout(request, plan, evidence, attachments, apps);
  }

  std::map<std::string, const EvidenceItem*> by_id;
  for (const auto& e : evidence) by_id[e.evidence_id] = &e;
  std::map<std::string, const SectionPlan*> by_app;
  for (const auto& sp : synthesis.sections) {
    const bool engaged =
        std::any_of(apps.begin(), apps.end(), [&](const EngagedApp& a) { return a.app_id == sp.app_id; });
    if (!engaged || !by_app.emplace(sp.app_id, &sp).second) {
      return fallback_layout(request, plan, evidence, attachments, apps);
    }
    for (const auto& id : sp.evidence_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end() || it->second->app_id != sp.app_id) {
        return fallback_layout(request, plan, evidence, attachments, apps);
      }
    }
  }

  std::vector<SectionSpec> specs;
  std::set<std::string> referenced;
  for (const auto& app : apps) {
    SectionSpec spec{app.display_name, "", {}};
    if (auto it = by_app.find(app.app_id); it != by_app.end()) {
      spec.heading = it->second->heading.empty() ? app.display_name : it->second->heading;
      spec.body = it->second->body;
      for (const auto& id : it->second->evidence_ids) {
        spec.items.push_back(by_id.at(id));
        referenced.insert(id);
      }
    }
    specs.push_back(std::move(spec));
  }
  SectionSpec tail{std::string(kAdditionalFindingsHeading), "", {}};
  for (const auto& e : evidence) {
    if (!referenced.contains(e.evidence_id)) tail.items.push_back(&e);
  }
  if (!tail.items.empty()) specs.push_back(std::move(tail));
  return assemble(request.task_id, synthesis.summary, specs, attachments);
}

std::string render_text(const IntegratedResponse& response) {
  std::string out = response.summary + "\n";
  for (const auto& section : response.sections) {
    out += "\n## " + section.heading + "\n";
    if (!section.body.empty()) out += section.body + "\n";
    for (const auto& ref : section.attachment_refs) {
      auto it = response.attachments.find(ref);
      out += "[attachment " + ref + (it != response.attachments.end() ? " (" + it->second.media_kind + ")" : "") +
             "]\n";
    }
  }
  return out;
}

}  // namespace appagent
