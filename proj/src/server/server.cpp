#include "appagent/server/server.hpp"

#include <httplib.h>

#include "appagent/core/errors.hpp"

namespace appagent {

std::string to_string(ApiErrorCode c) {
  switch (c) {
    case ApiErrorCode::kBadRequest: return "bad_request";
    case ApiErrorCode::kNotFound: return "not_found";
    case ApiErrorCode::kConflict: return "conflict";
    case ApiErrorCode::kBackendUnavailable: return "backend_unavailable";
    case ApiErrorCode::kBusy: return "busy";
    case ApiErrorCode::kInternal: return "internal";
  }
  return "internal";
}

int http_status(ApiErrorCode c) {
  switch (c) {
    case ApiErrorCode::kBadRequest: return 400;
    case ApiErrorCode::kNotFound: return 404;
    case ApiErrorCode::kConflict: return 409;
    case ApiErrorCode::kBackendUnavailable: return 502;
    case ApiErrorCode::kBusy: return 503;
    case ApiErrorCode::kInternal: return 500;
  }
  return 500;
}

void to_json(Json& j, const ApiError& e) {
  j = Json{{"code", to_string(e.code)}, {"message", e.message}};
  if (e.task_id) j["task_id"] = *e.task_id;
}

struct Server::Task {
  explicit Task(TaskRequest r) : request(std::move(r)), log(request.task_id) {}

  TaskRequest request;
  EventLog log;
  std::mutex mu;
  std::condition_variable stored;
  std::optional<TaskResult> result;
  std::thread worker;

  // The terminal event goes out just before the worker stores the result.
  std::unique_lock<std::mutex> settled() {
    std::unique_lock lock(mu);
    if (log.closed()) stored.wait_for(lock, std::chrono::seconds(5), [&] { return result.has_value(); });
    return lock;
  }
};

namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, ApiErrorCode code, std::string message,
                std::optional<std::string> task_id = std::nullopt) {
  res.status = http_status(code);
  res.set_content(canonical(ApiError{code, std::move(message), std::move(task_id)}), kJson);
}

ApiErrorCode code_for_failure(const std::string& kind) {
  if (kind == "bad_request") return ApiErrorCode::kBadRequest;
  if (kind == "internal") return ApiErrorCode::kInternal;
  return ApiErrorCode::kBackendUnavailable;  // the backend was down or produced unusable output
}

Budgets merge_budgets(const Budgets& base, const Json& overrides) {
  if (!overrides.is_object()) throw std::invalid_argument("budgets must be an object");
  Json merged = base;
  for (const auto& [key, value] : overrides.items()) {
    if (!merged.contains(key)) throw std::invalid_argument("unknown budget " + key);
    if (!value.is_number_integer()) throw std::invalid_argument("budget " + key + " must be an integer");
    merged[key] = value;
  }
  Budgets b = merged.get<Budgets>();
  if (!b.valid()) throw std::invalid_argument("budgets must all be positive");
  return b;
}

std::string sse_frame(const EngineEvent& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.kind() + "\ndata: " + canonical(e) + "\n\n";
}

}  // namespace

Server::Server(ServerConfig config, ReasoningPort& reasoning, AppDriver& driver, HistoryStore* history)
    : config_(std::move(config)),
      reasoning_(reasoning),
      driver_(driver),
      history_(history),
      http_(std::make_unique<httplib::Server>()) {
  // Event streams hold a worker for their whole lifetime.
  http_->new_task_queue = [] { return new httplib::ThreadPool(64); };
  // No SO_REUSEPORT: a port held by another server must fail to bind.
  http_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  routes();
}

Server::~Server() {
  stop();
  std::map<std::string, std::shared_ptr<Task>> tasks;
  {
    std::lock_guard lock(mu_);
    tasks = tasks_;
  }
  for (auto& [id, task] : tasks) {
    if (task->worker.joinable()) task->worker.join();
  }
}

int Server::bind() {
  if (config_.port == 0) {
    port_ = http_->bind_to_any_port(config_.host);
    if (port_ <= 0) throw std::runtime_error("cannot bind " + config_.host);
  } else {
    if (!http_->bind_to_port(config_.host, config_.port)) {
      throw std::runtime_error("cannot bind " + config_.host + ":" + std::to_string(config_.port) +
                               " (address in use?)");
    }
    port_ = config_.port;
  }
  return port_;
}

void Server::run() {
  run_entered_ = true;
  if (!stop_requested_) http_->listen_after_bind();
  run_done_ = true;
}

void Server::stop() {
  if (!http_) return;
  stop_requested_ = true;
  // httplib ignores stop() until its accept loop is up.
  while (run_entered_ && !run_done_ && !http_->is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  http_->stop();
}

void Server::wait_idle() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [&] { return running_ == 0; });
}

std::shared_ptr<Server::Task> Server::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = tasks_.find(id);
  return it == tasks_.end() ? nullptr : it->second;
}

std::string Server::submit(const TaskRequest& base, const Budgets& budgets) {
  std::shared_ptr<Task> task;
  {
    std::lock_guard lock(mu_);
    if (running_ >= config_.task_limit) return {};
    TaskRequest request = base;
    const std::string stem = derive_task_id(request.query_text, request.mode_hint);
    request.task_id = stem;
    for (int n = 2; tasks_.contains(request.task_id); ++n) request.task_id = stem + "-" + std::to_string(n);
    task = std::make_shared<Task>(std::move(request));
    tasks_[task->request.task_id] = task;
    order_.push_back(task->request.task_id);
    ++running_;
  }
  task->worker = std::thread([this, task, budgets] {
    Ports ports{reasoning_, driver_, history_};
    TaskResult result = run_task(task->request, ports, budgets, task->log, config_.engine);
    {
      std::lock_guard lock(task->mu);
      task->result = std::move(result);
    }
    task->stored.notify_all();
    std::lock_guard lock(mu_);
    --running_;
    idle_cv_.notify_all();
  });
  return task->request.task_id;
}

void Server::routes() {
  auto& http = *http_;
  const std::string origin = config_.cors_origin;

  http.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
  });
  http.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "unexpected error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    send_error(res, ApiErrorCode::kInternal, message);
  });

  http.Post("/tasks", [this](const httplib::Request& req, httplib::Response& res) {
    TaskRequest request;
    Budgets budgets = config_.budgets;
    try {
      const Json body = Json::parse(req.body);
      if (!body.is_object()) throw std::invalid_argument("body must be a JSON object");
      request.query_text = body.value("query", std::string());
      request.mode_hint = parse_mode_hint(body.value("mode", std::string("auto")));
      request.session_id = body.value("session_id", std::string());
      if (body.contains("budgets")) budgets = merge_budgets(budgets, body.at("budgets"));
    } catch (const std::exception& e) {
      return send_error(res, ApiErrorCode::kBadRequest, e.what());
    }
    if (request.query_text.find_first_not_of(" \t\r\n") == std::string::npos) {
      return send_error(res, ApiErrorCode::kBadRequest, "query is empty");
    }
    request.submitted_at = now_ms();
    const std::string id = submit(request, budgets);
    if (id.empty()) return send_error(res, ApiErrorCode::kBusy, "task limit reached");
    res.status = 202;
    res.set_content(Json{{"task_id", id}}.dump(), kJson);
  });

  auto task_summary = [](const Task& t) {
    Json j{{"task_id", t.request.task_id},
           {"query", t.request.query_text},
           {"mode", to_string(t.request.mode_hint)},
           {"phase", to_string(t.log.phase())},
           {"events", t.log.size()}};
    return j;
  };

  http.Get("/tasks", [this, task_summary](const httplib::Request&, httplib::Response& res) {
    Json out = Json::array();
    std::vector<std::shared_ptr<Task>> tasks;
    {
      std::lock_guard lock(mu_);
      for (const auto& id : order_) tasks.push_back(tasks_.at(id));
    }
    for (const auto& t : tasks) out.push_back(task_summary(*t));
    res.set_content(out.dump(), kJson);
  });

  http.Get(R"(/tasks/([^/]+))", [this, task_summary](const httplib::Request& req, httplib::Response& res) {
    auto task = find(req.matches[1]);
    if (!task) return send_error(res, ApiErrorCode::kNotFound, "no such task");
    Json j = task_summary(*task);
    auto lock = task->settled();
    if (task->result && task->result->phase == TaskPhase::kFailed) {
      j["error"] = Json{{"kind", task->result->error_kind}, {"message", task->result->error_message}};
    }
    res.set_content(j.dump(), kJson);
  });

  http.Get(R"(/tasks/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
    auto task = find(req.matches[1]);
    if (!task) return send_error(res, ApiErrorCode::kNotFound, "no such task");
    auto cursor = std::make_shared<size_t>(0);
    const auto keepalive = config_.keepalive;
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [task, cursor, keepalive](size_t, httplib::DataSink& sink) {
      auto batch = task->log.wait_from(*cursor, keepalive);
      if (batch.empty()) {
        if (task->log.closed() && *cursor >= task->log.size()) {
          sink.done();
          return true;
        }
        const std::string ping = ": keepalive\n\n";
        return sink.write(ping.data(), ping.size());
      }
      for (const auto& e : batch) {
        const std::string frame = sse_frame(e);
        if (!sink.write(frame.data(), frame.size())) return false;
        ++*cursor;
        if (e.terminal()) {
          sink.done();
          return true;
        }
      }
      return true;
    });
  });

  http.Get(R"(/tasks/([^/]+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
    auto task = find(req.matches[1]);
    if (!task) return send_error(res, ApiErrorCode::kNotFound, "no such task");
    auto lock = task->settled();
    if (!task->result) return send_error(res, ApiErrorCode::kConflict, "task not finished", task->request.task_id);
    const TaskResult& r = *task->result;
    if (r.phase == TaskPhase::kFailed) {
      return send_error(res, code_for_failure(r.error_kind), r.error_kind + ": " + r.error_message,
                        task->request.task_id);
    }
    res.set_content(canonical(r.response), kJson);
  });

  http.Get(R"(/tasks/([^/]+)/attachments/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto task = find(req.matches[1]);
    if (!task) return send_error(res, ApiErrorCode::kNotFound, "no such task");
    auto lock = task->settled();
    if (!task->result) return send_error(res, ApiErrorCode::kConflict, "task not finished", task->request.task_id);
    const auto& attachments = task->result->response.attachments;
    auto it = attachments.find(req.matches[2]);
    if (it == attachments.end()) return send_error(res, ApiErrorCode::kNotFound, "no such attachment");
    res.set_content(it->second.bytes, it->second.media_kind);
  });

  http.Get("/history", [this](const httplib::Request&, httplib::Response& res) {
    Json out = Json::array();
    if (history_ != nullptr) {
      for (const auto& d : history_->list()) {
        out.push_back(Json{{"signature", d.signature},
                           {"app_id", d.app_id},
                           {"actions", d.action_summary.size()},
                           {"outcome_note", d.outcome_note},
                           {"success", d.success},
                           {"use_count", d.use_count},
                           {"created_at", d.created_at},
                           {"last_used_at", d.last_used_at}});
      }
    }
    res.set_content(out.dump(), kJson);
  });

  http.Get("/apps", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(Json(driver_.apps()).dump(), kJson);
  });

  http.Get("/device/screen", [this](const httplib::Request&, httplib::Response& res) {
    auto snap = driver_.screen();
    if (!snap) return send_error(res, ApiErrorCode::kNotFound, "no active session");
    res.set_content(canonical(*snap), kJson);
  });
}

}  // namespace appagent
