#include "appagent/core/types.hpp"

#include <type_traits>

namespace appagent {

Timestamp now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string action_kind_name(const AppAction& a) {
  return std::visit(
      [](const auto& act) -> std::string {
        using T = std::decay_t<decltype(act)>;
        if constexpr (std::is_same_v<T, action::Launch>) return "launch";
        if constexpr (std::is_same_v<T, action::Search>) return "search";
        if constexpr (std::is_same_v<T, action::OpenResult>) return "open_result";
        if constexpr (std::is_same_v<T, action::ExtractContent>) return "extract_content";
        if constexpr (std::is_same_v<T, action::Screenshot>) return "screenshot";
        if constexpr (std::is_same_v<T, action::Back>) return "back";
      },
      a);
}

Observation Observation::home() { return Observation{}; }

Observation Observation::results(std::vector<std::string> titles) {
  Observation o;
  o.page_kind = PageKind::kResultsList;
  o.result_titles = std::move(titles);
  return o;
}

Observation Observation::content(std::string text) {
  Observation o;
  o.page_kind = PageKind::kContentPage;
  o.content_text = std::move(text);
  return o;
}

bool Observation::well_formed() const {
  switch (page_kind) {
    case PageKind::kHome:
      return !result_titles && !content_text;
    case PageKind::kResultsList:
      return result_titles && !content_text;
    case PageKind::kContentPage:
      return !result_titles && content_text;
  }
  return false;
}

bool Budgets::valid() const {
  return pages_per_subquery >= 1 && max_rounds >= 1 && max_subqueries >= 1 && max_actions >= 1 &&
         wall_time_limit.count() > 0;
}

}  // namespace appagent
