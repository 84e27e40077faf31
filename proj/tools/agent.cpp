// agent: run tasks in-process, serve the HTTP API, inspect history.
//
// Exit codes: 0 done, 1 task failed or runtime error, 2 usage error,
// 3 replay diverged.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <pthread.h>
#include <thread>

#include <CLI11.hpp>

#include "appagent/appdriver/catalog.hpp"
#include "appagent/appdriver/simulated.hpp"
#include "appagent/core/errors.hpp"
#include "appagent/core/ops.hpp"
#include "appagent/engine/engine.hpp"
#include "appagent/integrate/integrate.hpp"
#include "appagent/reasoning/live.hpp"
#include "appagent/reasoning/scripted.hpp"
#include "appagent/server/server.hpp"

namespace fs = std::filesystem;
using namespace appagent;

namespace {

constexpr int kExitDone = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResourceFlags {
  std::string catalog;
  std::string backend;
  std::string history;
  std::string budgets;
  int device_slots = 1;
  int action_delay_ms = 0;
};

void add_resource_flags(CLI::App& cmd, ResourceFlags& f) {
  cmd.add_option("--catalog", f.catalog, "App catalog JSON")->envname("APPAGENT_CATALOG");
  cmd.add_option("--backend", f.backend, "scripted:PATH | live:CONFIG (default: scripted, answers directly)")
      ->envname("APPAGENT_BACKEND");
  cmd.add_option("--history", f.history, "History log path (default: in memory)")->envname("APPAGENT_HISTORY");
  cmd.add_option("--budgets", f.budgets, "Budget overrides, e.g. P=2,R=3,Q=8,A=100,T=120000")
      ->envname("APPAGENT_BUDGETS");
  cmd.add_option("--device-slots", f.device_slots, "Concurrent device sessions")
      ->envname("APPAGENT_DEVICE_SLOTS")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--action-delay-ms", f.action_delay_ms, "Simulated latency per action")
      ->envname("APPAGENT_ACTION_DELAY_MS")
      ->check(CLI::NonNegativeNumber);
}

struct Resources {
  std::unique_ptr<SimulatedEnvironment> driver;
  std::unique_ptr<DocumentBackend> backend;
  std::unique_ptr<HistoryStore> history;
  Budgets budgets;
};

std::unique_ptr<DocumentBackend> make_backend(const std::string& spec) {
  if (spec.empty() || spec == "scripted") {
    ScriptedResponses script;
    script.default_policy = ScriptPolicy::kFallback;
    return std::make_unique<ScriptedBackend>(script);
  }
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string path = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if ((kind != "scripted" && kind != "live") || path.empty()) {
    throw UsageError("--backend must be scripted:PATH or live:CONFIG, got '" + spec + "'");
  }
  if (!fs::exists(path)) throw UsageError("backend file not found: " + path);
  if (kind == "scripted") return std::make_unique<ScriptedBackend>(load_script(path));
  return std::make_unique<LiveBackend>(load_live_config(path));
}

Resources resolve(const ResourceFlags& f, bool need_catalog = true) {
  Resources r;
  if (need_catalog) {
    if (f.catalog.empty()) throw UsageError("--catalog is required (or set APPAGENT_CATALOG)");
    if (!fs::exists(f.catalog)) throw UsageError("catalog not found: " + f.catalog);
    SimulatedOptions opts;
    opts.device_slots = f.device_slots;
    opts.action_delay = std::chrono::milliseconds(f.action_delay_ms);
    r.driver = std::make_unique<SimulatedEnvironment>(load_catalog(f.catalog), opts);
  }
  r.backend = make_backend(f.backend);
  r.history = f.history.empty() ? std::make_unique<HistoryStore>() : std::make_unique<HistoryStore>(f.history);
  if (r.history->skipped_lines() > 0) {
    std::cerr << "warning: skipped " << r.history->skipped_lines() << " unreadable history line(s)\n";
  }
  try {
    r.budgets = parse_budget_spec(f.budgets);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return r;
}

void write_file(const fs::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string attachment_filename(const std::string& id, const std::string& media_kind) {
  if (media_kind == "image/png") return id + ".png";
  if (media_kind == "image/jpeg") return id + ".jpg";
  if (media_kind.rfind("text/", 0) == 0) return id + ".txt";
  return id + ".bin";
}

// The signature separator is awkward to type; accept '|' for it.
std::string signature_arg(std::string sig) {
  if (sig.find(kSignatureSeparator) != std::string::npos) return sig;
  const auto bar = sig.rfind('|');
  if (bar != std::string::npos) sig.replace(bar, 1, kSignatureSeparator);
  return sig;
}

// --- run ---------------------------------------------------------------

struct RunFlags {
  std::string query;
  std::string mode = "auto";
  std::string out;
  bool json = false;
  ResourceFlags res;
};

int cmd_run(const RunFlags& f) {
  Resources r = resolve(f.res);
  TaskRequest request;
  request.query_text = f.query;
  request.mode_hint = parse_mode_hint(f.mode);
  request.task_id = derive_task_id(request.query_text, request.mode_hint);
  request.submitted_at = now_ms();

  EventLog events(request.task_id);
  events.subscribe([](const EngineEvent& e) { std::cerr << "[" << e.seq << "] " << e.kind() << "\n"; });
  TaskResult result = run_task(request, Ports{*r.backend, *r.driver, r.history.get()}, r.budgets, events);

  for (const auto& note : result.replays) {
    if (note.diverged) {
      std::cerr << "replay of " << note.app_id << " diverged at step " << note.divergence_step << ": " << note.reason
                << "; planned from scratch\n";
    } else {
      std::cerr << "replayed recorded operation for " << note.app_id << "\n";
    }
  }
  if (result.persistence_warning) std::cerr << "warning: history could not be written\n";
  std::cerr << "trace_digest " << trace_digest(result.trace) << "\n";

  if (!f.out.empty()) {
    fs::create_directories(f.out);
    std::string lines;
    for (const auto& e : events.snapshot()) lines += canonical(e) + "\n";
    write_file(fs::path(f.out) / "events.jsonl", lines);
    write_file(fs::path(f.out) / "trace.json", Json(result.trace).dump(2) + "\n");
    if (result.phase == TaskPhase::kDone) {
      write_file(fs::path(f.out) / "response.json", canonical(result.response) + "\n");
      if (!result.response.attachments.empty()) {
        fs::create_directories(fs::path(f.out) / "attachments");
        for (const auto& [id, a] : result.response.attachments) {
          write_file(fs::path(f.out) / "attachments" / attachment_filename(id, a.media_kind), a.bytes);
        }
      }
    }
  }

  if (result.phase == TaskPhase::kFailed) {
    std::cerr << "task failed (" << result.error_kind << "): " << result.error_message << "\n";
    return kExitFailed;
  }
  if (f.json) {
    std::cout << canonical(result.response) << "\n";
  } else {
    std::cout << render_text(result.response);
  }
  return kExitDone;
}

// --- serve -------------------------------------------------------------

struct ServeFlags {
  std::string listen = "127.0.0.1:8787";
  size_t task_limit = 2;
  std::string cors_origin = "*";
  ResourceFlags res;
};

int cmd_serve(const ServeFlags& f) {
  Resources r = resolve(f.res);
  ServerConfig config;
  const auto colon = f.listen.rfind(':');
  if (colon == std::string::npos) throw UsageError("--listen must be HOST:PORT");
  config.host = f.listen.substr(0, colon);
  try {
    config.port = std::stoi(f.listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("--listen must be HOST:PORT");
  }
  if (config.port < 0 || config.port > 65535) throw UsageError("port out of range");
  config.task_limit = f.task_limit;
  config.cors_origin = f.cors_origin;
  config.budgets = r.budgets;

  // Signals go to a dedicated thread so stop() runs outside handler context.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  Server server(config, *r.backend, *r.driver, r.history.get());
  int port = 0;
  try {
    port = server.bind();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  std::cout << "listening on http://" << config.host << ":" << port << std::endl;

  std::thread waiter([&server, set] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.run();
  // run() also returns on internal stop; make sure the waiter exits.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kExitDone;
}

// --- history / replay --------------------------------------------------

int cmd_history_list(const ResourceFlags& f) {
  if (f.history.empty()) throw UsageError("--history is required");
  HistoryStore store(f.history);
  const auto docs = store.list();
  if (docs.empty()) {
    std::cout << "no documents\n";
    return kExitDone;
  }
  for (const auto& d : docs) {
    std::cout << d.signature << "\tuses=" << d.use_count << "\tactions=" << d.action_summary.size()
              << (d.success ? "" : "\tfailed") << "\n";
  }
  return kExitDone;
}

int cmd_history_show(const ResourceFlags& f, const std::string& signature) {
  if (f.history.empty()) throw UsageError("--history is required");
  HistoryStore store(f.history);
  auto doc = store.latest(signature_arg(signature));
  if (!doc) {
    std::cerr << "no document for " << signature << "\n";
    return kExitFailed;
  }
  std::cout << Json(*doc).dump(2) << "\n";
  return kExitDone;
}

int cmd_replay(const ResourceFlags& f, const std::string& signature) {
  if (f.history.empty()) throw UsageError("--history is required");
  Resources r = resolve(f);
  auto doc = r.history->latest(signature_arg(signature));
  if (!doc) {
    std::cerr << "no document for " << signature << "\n";
    return kExitFailed;
  }
  if (!doc->success) {
    std::cerr << "latest document for " << signature << " records a failed run\n";
    return kExitFailed;
  }
  ReplayResult rr = replay(*doc, *r.driver);
  if (rr.diverged) {
    std::cout << "diverged at step " << rr.divergence_step << ": " << rr.reason << "\n";
    return kExitDiverged;
  }
  std::cout << "replayed " << rr.steps.size() << " steps, " << rr.evidence.size() << " evidence items\n";
  return kExitDone;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proactive app agent: run tasks, serve the API, inspect history"};
  app.require_subcommand(1);

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "Run one task in-process");
  run_cmd->add_option("query", run.query, "Natural-language query")->required();
  run_cmd->add_option("--mode", run.mode, "auto | shallow | deep")
      ->check(CLI::IsMember({"auto", "shallow", "deep"}));
  run_cmd->add_option("--out", run.out, "Directory for events, trace, response and attachments");
  run_cmd->add_flag("--json", run.json, "Print the canonical response JSON");
  add_resource_flags(*run_cmd, run.res);

  ServeFlags serve;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  serve_cmd->add_option("--listen", serve.listen, "HOST:PORT (port 0 picks a free one)")->envname("APPAGENT_LISTEN");
  serve_cmd->add_option("--task-limit", serve.task_limit, "Concurrent background tasks")
      ->envname("APPAGENT_TASK_LIMIT")
      ->check(CLI::PositiveNumber);
  serve_cmd->add_option("--cors-origin", serve.cors_origin, "Allowed console origin")->envname("APPAGENT_CORS_ORIGIN");
  add_resource_flags(*serve_cmd, serve.res);

  ResourceFlags hist;
  std::string signature;
  auto* history_cmd = app.add_subcommand("history", "Inspect operation documents");
  history_cmd->require_subcommand(1);
  auto* list_cmd = history_cmd->add_subcommand("list", "Signatures with use counts");
  list_cmd->add_option("--history", hist.history, "History log path")->envname("APPAGENT_HISTORY");
  auto* show_cmd = history_cmd->add_subcommand("show", "Print the latest document for a signature");
  show_cmd->add_option("signature", signature, "QUERY∥APP (or QUERY|APP)")->required();
  show_cmd->add_option("--history", hist.history, "History log path")->envname("APPAGENT_HISTORY");

  ResourceFlags rep;
  std::string rep_signature;
  auto* replay_cmd = app.add_subcommand("replay", "Replay a recorded operation against the catalog");
  replay_cmd->add_option("signature", rep_signature, "QUERY∥APP (or QUERY|APP)")->required();
  add_resource_flags(*replay_cmd, rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitDone : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*serve_cmd) return cmd_serve(serve);
    if (*list_cmd) return cmd_history_list(hist);
    if (*show_cmd) return cmd_history_show(hist, signature);
    if (*replay_cmd) return cmd_replay(rep, rep_signature);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << "run 'agent --help' for usage\n";
    return kExitUsage;
  } catch (const CatalogParseError& e) {
    std::cerr << "usage error: invalid catalog: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DuplicateApp& e) {
    std::cerr << "usage error: invalid catalog: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SchemaError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitUsage;
}
