#pragma once

#include <atomic>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "appagent/engine/engine.hpp"

namespace httplib {
class Server;
}

namespace appagent {

enum class ApiErrorCode { kBadRequest, kNotFound, kConflict, kBackendUnavailable, kBusy, kInternal };

struct ApiError {
  ApiErrorCode code = ApiErrorCode::kInternal;
  std::string message;
  std::optional<std::string> task_id;
};

std::string to_string(ApiErrorCode c);
int http_status(ApiErrorCode c);
void to_json(Json& j, const ApiError& e);

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8787;  // 0 picks a free port
  size_t task_limit = 2;
  std::string cors_origin = "*";
  Budgets budgets;
  EngineOptions engine;
  std::chrono::milliseconds keepalive{15'000};
};

/// HTTP front end over the engine. Tasks run on background threads; every
/// body is the canonical JSON of the core types.
class Server {
 public:
  Server(ServerConfig config, ReasoningPort& reasoning, AppDriver& driver, HistoryStore* history);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the listening socket and returns the bound port. Throws
  /// std::runtime_error when the address is unavailable.
  int bind();
  /// Serves until stop(). bind() must have succeeded.
  void run();
  void stop();

  /// Blocks until no task is running.
  void wait_idle();

  int port() const { return port_; }

 private:
  struct Task;

  void routes();
  std::shared_ptr<Task> find(const std::string& id) const;
  std::string submit(const TaskRequest& request, const Budgets& budgets);

  ServerConfig config_;
  ReasoningPort& reasoning_;
  AppDriver& driver_;
  HistoryStore* history_;
  std::unique_ptr<httplib::Server> http_;
  int port_ = 0;
  std::atomic<bool> stop_requested_{false};
  std::atomic<bool> run_entered_{false};
  std::atomic<bool> run_done_{false};

  mutable std::mutex mu_;
  std::condition_variable idle_cv_;
  std::map<std::string, std::shared_ptr<Task>> tasks_;
  std::vector<std::string> order_;
  size_t running_ = 0;
};

}  // namespace appagent
