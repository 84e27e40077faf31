#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <vector>

#include "appagent/appdriver/catalog.hpp"
#include "appagent/appdriver/port.hpp"

namespace appagent {

inline constexpr std::string_view kSimshotMediaKind = "text/x-simshot";

struct SimulatedOptions {
  int device_slots = 1;
  // Artificial latency per perform() call, for observing a run in progress.
  std::chrono::milliseconds action_delay{0};
};

/// Deterministic stand-in for a phone running searchable apps. Each session
/// walks the page machine home -> results_list -> content_page, with Back
/// popping one level. The catalog is immutable after construction.
class SimulatedEnvironment : public AppDriver {
 public:
  explicit SimulatedEnvironment(std::vector<AppCatalog> catalog, SimulatedOptions options = {});

  std::vector<AppDescriptor> apps() const override;
  SessionId open_session(const std::string& app_id, std::chrono::milliseconds wait) override;
  Observation perform(SessionId session, const AppAction& action) override;
  Attachment screenshot_bytes(SessionId session) override;
  void close_session(SessionId session) override;
  std::optional<ScreenSnapshot> screen() const override;

  const std::vector<AppCatalog>& catalog() const { return catalog_; }

  /// Actions applied to an open session so far.
  std::vector<AppAction> action_log(SessionId session) const;

 private:
  struct Page {
    Observation observation;
    std::vector<std::string> result_ids;  // item ids behind result_titles
  };

  struct SessionState {
    const AppCatalog* app = nullptr;
    std::vector<Page> stack;
    std::vector<AppAction> action_log;
    std::uint64_t last_active = 0;
  };

  const AppCatalog& app_or_throw(const std::string& app_id) const;
  SessionState& session_or_throw(SessionId id);
  Observation apply(SessionState& s, const AppAction& action);

  std::vector<AppCatalog> catalog_;
  SimulatedOptions options_;

  mutable std::mutex mu_;
  std::condition_variable slot_freed_;
  std::map<SessionId, SessionState> sessions_;
  SessionId next_id_ = 1;
  std::uint64_t activity_clock_ = 0;
};

/// SIMSHOT bytes for a page: "SIMSHOT\n" + app_id + "\n" + canonical observation.
Attachment simshot(const std::string& app_id, const Observation& observation);

/// Content-derived attachment id ("shot-" + 16 hex digits of the sha256).
std::string attachment_id(const Attachment& attachment);

}  // namespace appagent
