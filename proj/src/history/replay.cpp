#include <optional>
#include <stdexcept>

#include "appagent/core/errors.hpp"
#include "appagent/core/harvest.hpp"
#include "appagent/core/json.hpp"
#include "appagent/history/store.hpp"

namespace appagent {

ReplayResult replay(const OperationDocument& document, AppDriver& driver, int priority,
                    std::chrono::milliseconds slot_wait) {
  if (!document.success) throw std::invalid_argument("replay requires a successful operation document");
  if (document.observed_kinds.size() != document.action_summary.size()) {
    throw std::invalid_argument("operation document lacks observed page kinds");
  }

  ReplayResult result;
  std::optional<Session> session;
  int segment = 0;
  for (size_t i = 0; i < document.action_summary.size(); ++i) {
    const AppAction& act = document.action_summary[i];
    auto diverge = [&](std::string reason) {
      result.diverged = true;
      result.divergence_step = static_cast<int>(i);
      result.reason = std::move(reason);
    };
    try {
      const bool launch = std::holds_alternative<action::Launch>(act);
      if (launch || !session) {
        session.reset();
        session.emplace(driver, document.app_id, slot_wait);
        ++segment;
      }
      Observation obs = session->perform(act);
      if (obs.page_kind != document.observed_kinds[i]) {
        diverge("expected " + to_string(document.observed_kinds[i]) + " after " + action_kind_name(act) + ", got " +
                to_string(obs.page_kind));
        break;
      }
      if (obs.screenshot_ref) result.attachments[*obs.screenshot_ref] = session->screenshot();
      result.steps.push_back(TraceStep{static_cast<int>(result.steps.size()),
                                       "replay-" + document.app_id + "-" + std::to_string(segment), document.app_id,
                                       act, std::move(obs), now_ms()});
    } catch (const DriverError& e) {
      diverge(action_kind_name(act) + " failed: " + e.what());
      break;
    }
  }
  if (!result.diverged) result.evidence = harvest_evidence(result.steps, priority);
  return result;
}

}  // namespace appagent
