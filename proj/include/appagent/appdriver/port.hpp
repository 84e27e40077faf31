#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "appagent/core/json.hpp"
#include "appagent/core/types.hpp"

namespace appagent {

enum class Capability { kSearch, kOpen, kExtract, kScreenshot };

std::string to_string(Capability c);
Capability parse_capability(std::string_view s);

struct AppDescriptor {
  std::string app_id;
  std::string display_name;
  std::set<Capability> capabilities;
};

using SessionId = std::uint64_t;

/// What the device is currently showing, for the operator console.
struct ScreenSnapshot {
  std::string app_id;
  Observation observation;
  Attachment screenshot;
};

void to_json(Json& j, const AppDescriptor& d);
void to_json(Json& j, const ScreenSnapshot& s);

/// The app/device port. A real-device adapter implements exactly this
/// contract; see docs/appdriver-port.md.
class AppDriver {
 public:
  virtual ~AppDriver() = default;

  virtual std::vector<AppDescriptor> apps() const = 0;

  /// Claims a device slot, waiting up to `wait` for one to free up.
  /// Throws UnknownApp or DeviceBusy.
  virtual SessionId open_session(const std::string& app_id, std::chrono::milliseconds wait) = 0;

  virtual Observation perform(SessionId session, const AppAction& action) = 0;

  virtual Attachment screenshot_bytes(SessionId session) = 0;

  virtual void close_session(SessionId session) = 0;

  /// Most recently active open session, or nullopt when the device is idle.
  virtual std::optional<ScreenSnapshot> screen() const = 0;
};

/// Owns an open session and releases its device slot on destruction.
class Session {
 public:
  Session(AppDriver& driver, const std::string& app_id, std::chrono::milliseconds wait = {})
      : driver_(&driver), id_(driver.open_session(app_id, wait)) {}
  ~Session() { reset(); }

  Session(Session&& other) noexcept : driver_(other.driver_), id_(other.id_) { other.driver_ = nullptr; }
  Session& operator=(Session&& other) noexcept {
    if (this != &other) {
      reset();
      driver_ = other.driver_;
      id_ = other.id_;
      other.driver_ = nullptr;
    }
    return *this;
  }
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  SessionId id() const { return id_; }
  Observation perform(const AppAction& action) { return driver_->perform(id_, action); }
  Attachment screenshot() { return driver_->screenshot_bytes(id_); }

 private:
  void reset() {
    if (driver_ != nullptr) driver_->close_session(id_);
    driver_ = nullptr;
  }

  AppDriver* driver_;
  SessionId id_;
};

}  // namespace appagent
