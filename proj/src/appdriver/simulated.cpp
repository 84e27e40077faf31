#include "appagent/appdriver/simulated.hpp"

#include <algorithm>
#include <thread>

#include "appagent/core/errors.hpp"
#include "appagent/core/json.hpp"
#include "appagent/core/ops.hpp"

namespace appagent {

Attachment simshot(const std::string& app_id, const Observation& observation) {
  Observation bare = observation;
  bare.screenshot_ref.reset();
  return Attachment{std::string(kSimshotMediaKind), "SIMSHOT\n" + app_id + "\n" + canonical(bare)};
}

std::string attachment_id(const Attachment& attachment) {
  return "shot-" + sha256_hex(attachment.bytes).substr(0, 16);
}

SimulatedEnvironment::SimulatedEnvironment(std::vector<AppCatalog> catalog, SimulatedOptions options)
    : catalog_(std::move(catalog)), options_(options) {
  if (options_.device_slots < 1) throw std::invalid_argument("device_slots must be >= 1");
  std::set<std::string> seen;
  for (const auto& app : catalog_) {
    if (!seen.insert(app.descriptor.app_id).second) throw DuplicateApp("duplicate app_id: " + app.descriptor.app_id);
  }
}

std::vector<AppDescriptor> SimulatedEnvironment::apps() const {
  std::vector<AppDescriptor> out;
  for (const auto& app : catalog_) out.push_back(app.descriptor);
  return out;
}

const AppCatalog& SimulatedEnvironment::app_or_throw(const std::string& app_id) const {
  for (const auto& app : catalog_) {
    if (app.descriptor.app_id == app_id) return app;
  }
  throw UnknownApp("unknown app: " + app_id);
}

SimulatedEnvironment::SessionState& SimulatedEnvironment::session_or_throw(SessionId id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw IllegalAction("no such session: " + std::to_string(id));
  return it->second;
}

SessionId SimulatedEnvironment::open_session(const std::string& app_id, std::chrono::milliseconds wait) {
  const AppCatalog& app = app_or_throw(app_id);
  std::unique_lock lock(mu_);
  const bool free = slot_freed_.wait_for(lock, wait, [&] {
    return static_cast<int>(sessions_.size()) < options_.device_slots;
  });
  if (!free) throw DeviceBusy("no free device slot for " + app_id);
  const SessionId id = next_id_++;
  SessionState& s = sessions_[id];
  s.app = &app;
  s.stack.push_back(Page{Observation::home(), {}});
  s.last_active = ++activity_clock_;
  return id;
}

void SimulatedEnvironment::close_session(SessionId session) {
  {
    std::lock_guard lock(mu_);
    sessions_.erase(session);
  }
  slot_freed_.notify_all();
}

Observation SimulatedEnvironment::perform(SessionId session, const AppAction& action) {
  if (options_.action_delay.count() > 0) std::this_thread::sleep_for(options_.action_delay);
  std::lock_guard lock(mu_);
  SessionState& s = session_or_throw(session);
  Observation obs = apply(s, action);
  s.action_log.push_back(action);
  s.last_active = ++activity_clock_;
  return obs;
}

Observation SimulatedEnvironment::apply(SessionState& s, const AppAction& action) {
  const AppCatalog& app = *s.app;
  const auto& caps = app.descriptor.capabilities;
  auto require = [&](Capability c) {
    if (!caps.contains(c)) throw IllegalAction(app.descriptor.app_id + " lacks capability " + to_string(c));
  };
  Page& top = s.stack.back();

  if (const auto* a = std::get_if<action::Launch>(&action)) {
    if (a->app_id != app.descriptor.app_id) throw IllegalAction("session belongs to " + app.descriptor.app_id);
    s.stack.assign(1, Page{Observation::home(), {}});
    return s.stack.back().observation;
  }
  if (const auto* a = std::get_if<action::Search>(&action)) {
    require(Capability::kSearch);
    Page page;
    page.result_ids = rank(a->query, app.items, app.page_size);
    std::vector<std::string> titles;
    for (const auto& id : page.result_ids) {
      auto it = std::find_if(app.items.begin(), app.items.end(), [&](const CatalogItem& i) { return i.item_id == id; });
      titles.push_back(it->title);
    }
    page.observation = Observation::results(std::move(titles));
    s.stack.push_back(std::move(page));
    return s.stack.back().observation;
  }
  if (const auto* a = std::get_if<action::OpenResult>(&action)) {
    require(Capability::kOpen);
    if (top.observation.page_kind != PageKind::kResultsList || top.result_ids.empty()) {
      throw IllegalAction("open_result requires a non-empty results list");
    }
    if (a->index < 0 || a->index >= static_cast<int>(top.result_ids.size())) {
      throw IndexOutOfRange("open_result index " + std::to_string(a->index) + " with " +
                            std::to_string(top.result_ids.size()) + " results");
    }
    const auto& id = top.result_ids[static_cast<size_t>(a->index)];
    auto it = std::find_if(app.items.begin(), app.items.end(), [&](const CatalogItem& i) { return i.item_id == id; });
    s.stack.push_back(Page{Observation::content(it->content), {}});
    return s.stack.back().observation;
  }
  if (std::holds_alternative<action::ExtractContent>(action)) {
    require(Capability::kExtract);
    if (top.observation.page_kind != PageKind::kContentPage) throw IllegalAction("extract_content requires a content page");
    return top.observation;
  }
  if (std::holds_alternative<action::Screenshot>(action)) {
    require(Capability::kScreenshot);
    Observation obs = top.observation;
    obs.screenshot_ref = attachment_id(simshot(app.descriptor.app_id, obs));
    return obs;
  }
  // Back
  if (s.stack.size() < 2) throw IllegalAction("back from home page");
  s.stack.pop_back();
  return s.stack.back().observation;
}

Attachment SimulatedEnvironment::screenshot_bytes(SessionId session) {
  std::lock_guard lock(mu_);
  SessionState& s = session_or_throw(session);
  return simshot(s.app->descriptor.app_id, s.stack.back().observation);
}

std::optional<ScreenSnapshot> SimulatedEnvironment::screen() const {
  std::lock_guard lock(mu_);
  const SessionState* latest = nullptr;
  for (const auto& [id, s] : sessions_) {
    if (latest == nullptr || s.last_active > latest->last_active) latest = &s;
  }
  if (latest == nullptr) return std::nullopt;
  const auto& app_id = latest->app->descriptor.app_id;
  Attachment shot = simshot(app_id, latest->stack.back().observation);
  Observation obs = latest->stack.back().observation;
  obs.screenshot_ref = attachment_id(shot);
  return ScreenSnapshot{app_id, std::move(obs), std::move(shot)};
}

std::vector<AppAction> SimulatedEnvironment::action_log(SessionId session) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session);
  return it == sessions_.end() ? std::vector<AppAction>{} : it->second.action_log;
}

}  // namespace appagent
