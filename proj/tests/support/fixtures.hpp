#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "appagent/appdriver/catalog.hpp"
#include "appagent/appdriver/simulated.hpp"
#include "appagent/engine/engine.hpp"
#include "appagent/reasoning/scripted.hpp"

namespace fixtures {

using namespace appagent;

inline constexpr const char* kScenario1 = "How many hours are there in one day?";
inline constexpr const char* kScenario2 = "How to upload a video on YouTube?";
inline constexpr const char* kScenario3 = "How to keep a cat?";

std::filesystem::path path(const std::string& name);
std::vector<AppCatalog> demo_catalog();
ScriptedResponses scenario_script();

/// Fresh temp directory, removed on destruction.
struct TempDir {
  TempDir();
  ~TempDir();
  std::filesystem::path dir;
};

/// Simulated device + scripted backend + call counting, wired for run_task.
struct Harness {
  explicit Harness(std::vector<AppCatalog> catalog = demo_catalog(), ScriptedResponses script = scenario_script(),
                   SimulatedOptions options = {});

  TaskResult run(const std::string& query, ModeHint mode = ModeHint::kAuto, Budgets budgets = {},
                 HistoryStore* history = nullptr);

  SimulatedEnvironment env;
  ScriptedBackend backend;
  RecordingPort port;
  std::unique_ptr<EventLog> events;  // log of the last run
};

/// Catalog of 1..max_apps apps drawn from a small vocabulary so searches hit.
std::vector<AppCatalog> random_catalog(std::mt19937& rng, int max_apps = 3, int max_items = 12);
std::vector<CatalogItem> random_items(std::mt19937& rng, int count);
std::string random_query(std::mt19937& rng);

/// Plans every app in deep or shallow mode; the judge never says enough and
/// keeps spawning fresh sub-queries for every app.
ScriptedResponses adversarial_script(const std::vector<AppCatalog>& catalog, ExecMode mode);

}  // namespace fixtures
