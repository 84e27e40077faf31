#include "appagent/core/harvest.hpp"

namespace appagent {

namespace {

double positional_relevance(int position) { return 1.0 / (1.0 + position); }

}  // namespace

std::vector<EvidenceItem> harvest_evidence(std::span<const TraceStep> steps, int priority) {
  std::vector<EvidenceItem> out;
  size_t i = 0;
  while (i < steps.size()) {
    const auto* search = std::get_if<action::Search>(&steps[i].action);
    if (search == nullptr || !steps[i].observation.result_titles) {
      ++i;
      continue;
    }
    const TraceStep& search_step = steps[i];
    const auto& titles = *search_step.observation.result_titles;
    size_t end = i + 1;
    bool opened = false;
    while (end < steps.size() && !std::holds_alternative<action::Search>(steps[end].action) &&
           !std::holds_alternative<action::Launch>(steps[end].action)) {
      opened = opened || std::holds_alternative<action::OpenResult>(steps[end].action);
      ++end;
    }

    auto base_item = [&](int position) {
      EvidenceItem e;
      e.app_id = search_step.app_id;
      e.subquery = search->query;
      e.title = position < static_cast<int>(titles.size()) ? titles[static_cast<size_t>(position)] : std::string();
      e.relevance = positional_relevance(position);
      e.subtask_id = search_step.subtask_id;
      e.priority = priority;
      return e;
    };

    if (!opened) {
      std::optional<int> shot_step;
      std::optional<std::string> shot_ref;
      for (size_t k = i + 1; k < end; ++k) {
        if (std::holds_alternative<action::Screenshot>(steps[k].action) &&
            steps[k].observation.page_kind == PageKind::kResultsList && steps[k].observation.screenshot_ref) {
          shot_step = steps[k].step_index;
          shot_ref = steps[k].observation.screenshot_ref;
          break;
        }
      }
      for (size_t pos = 0; pos < titles.size(); ++pos) {
        EvidenceItem e = base_item(static_cast<int>(pos));
        e.depth = 0;
        e.trace_indices.push_back(search_step.step_index);
        if (shot_step) e.trace_indices.push_back(*shot_step);
        if (pos == 0) e.screenshot_ref = shot_ref;
        out.push_back(std::move(e));
      }
    } else {
      EvidenceItem* current = nullptr;
      for (size_t k = i + 1; k < end; ++k) {
        const TraceStep& step = steps[k];
        if (const auto* open = std::get_if<action::OpenResult>(&step.action)) {
          EvidenceItem e = base_item(open->index);
          e.depth = 1;
          e.trace_indices.push_back(step.step_index);
          out.push_back(std::move(e));
          current = &out.back();
        } else if (current == nullptr || step.observation.page_kind != PageKind::kContentPage) {
          current = std::holds_alternative<action::Back>(step.action) ? nullptr : current;
        } else if (std::holds_alternative<action::ExtractContent>(step.action)) {
          current->snippet = step.observation.content_text.value_or("");
          current->trace_indices.push_back(step.step_index);
        } else if (std::holds_alternative<action::Screenshot>(step.action)) {
          current->screenshot_ref = step.observation.screenshot_ref;
          current->trace_indices.push_back(step.step_index);
        }
      }
    }
    i = end;
  }
  return out;
}

}  // namespace appagent
