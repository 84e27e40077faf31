#include "fixtures.hpp"

#include <atomic>
#include <unistd.h>

namespace fixtures {

namespace fs = std::filesystem;

fs::path path(const std::string& name) { return fs::path(APPAGENT_FIXTURE_DIR) / name; }

std::vector<AppCatalog> demo_catalog() { return load_catalog(path("catalog.json")); }

ScriptedResponses scenario_script() { return load_script(path("scenarios.json")); }

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  dir = fs::temp_directory_path() /
        ("appagent-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(dir, ec);
}

Harness::Harness(std::vector<AppCatalog> catalog, ScriptedResponses script, SimulatedOptions options)
    : env(std::move(catalog), options), backend(std::move(script)), port(backend) {}

TaskResult Harness::run(const std::string& query, ModeHint mode, Budgets budgets, HistoryStore* history) {
  TaskRequest req;
  req.query_text = query;
  req.mode_hint = mode;
  req.task_id = derive_task_id(query, mode);
  events = std::make_unique<EventLog>(req.task_id);
  return run_task(req, Ports{port, env, history}, budgets, *events);
}

namespace {

const std::vector<std::string> kWords = {"cat",   "dog",    "video", "upload", "food",  "guide", "care",
                                         "toy",   "travel", "phone", "case",   "music", "cook",  "recipe",
                                         "bike",  "repair", "garden", "plant", "book",  "review"};

std::string pick(std::mt19937& rng) { return kWords[std::uniform_int_distribution<size_t>(0, kWords.size() - 1)(rng)]; }

}  // namespace

std::vector<CatalogItem> random_items(std::mt19937& rng, int count) {
  std::vector<CatalogItem> items;
  std::uniform_int_distribution<int> words(1, 4);
  std::uniform_int_distribution<int> ntags(0, 3);
  for (int i = 0; i < count; ++i) {
    CatalogItem item;
    item.item_id = "i" + std::to_string(i);
    const int n = words(rng);
    for (int w = 0; w < n; ++w) item.title += (w ? " " : "") + pick(rng);
    // Duplicate titles exercise the item_id tie-break.
    if (i > 0 && rng() % 7 == 0) item.title = items[rng() % items.size()].title;
    if (rng() % 5 == 0) item.title[0] = static_cast<char>(std::toupper(item.title[0]));
    const int t = ntags(rng);
    for (int k = 0; k < t; ++k) item.tags.push_back(pick(rng));
    item.content = "Content of " + item.title + " #" + std::to_string(i);
    items.push_back(std::move(item));
  }
  return items;
}

std::string random_query(std::mt19937& rng) {
  std::string q;
  const int n = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int w = 0; w < n; ++w) q += (w ? " " : "") + pick(rng);
  if (rng() % 3 == 0) q += "?";
  return q;
}

std::vector<AppCatalog> random_catalog(std::mt19937& rng, int max_apps, int max_items) {
  std::vector<AppCatalog> apps;
  const int n = std::uniform_int_distribution<int>(1, max_apps)(rng);
  for (int a = 0; a < n; ++a) {
    AppCatalog app;
    app.descriptor.app_id = "app" + std::to_string(a);
    app.descriptor.display_name = "App " + std::to_string(a);
    app.descriptor.capabilities = {Capability::kSearch, Capability::kOpen, Capability::kExtract, Capability::kScreenshot};
    app.page_size = std::uniform_int_distribution<int>(1, 6)(rng);
    app.items = random_items(rng, std::uniform_int_distribution<int>(0, max_items)(rng));
    apps.push_back(std::move(app));
  }
  return apps;
}

ScriptedResponses adversarial_script(const std::vector<AppCatalog>& catalog, ExecMode mode) {
  Json subtasks = Json::array();
  Json subqueries = Json::array();
  Json spawned = Json::array();
  for (const auto& app : catalog) {
    const auto& id = app.descriptor.app_id;
    subtasks.push_back(Json{{"app_id", id}, {"goal", "cover " + id}, {"seed_query", "{query} " + id}});
    subqueries.push_back(Json{{"app_id", id}, {"query", "{query} " + id + " one"}});
    subqueries.push_back(Json{{"app_id", id}, {"query", "{query} " + id + " two"}});
    spawned.push_back(Json{{"app_id", id}, {"query", "{query} " + id + " round {round} a"}});
    spawned.push_back(Json{{"app_id", id}, {"query", "{query} " + id + " round {round} b"}});
  }
  const Json script{
      {"default_policy", "fallback"},
      {"entries",
       Json::array({
           Json{{"kind", "assess"},
                {"any", true},
                {"response",
                 {{"needs_external", true},
                  {"mode", mode == ExecMode::kDeep ? "deep" : "shallow"},
                  {"base_answer", "base answer for {query}"},
                  {"subtasks", subtasks}}}},
           Json{{"kind", "expand"}, {"any", true}, {"response", {{"subqueries", subqueries}}}},
           Json{{"kind", "judge"},
                {"any", true},
                {"response", {{"sufficient", false}, {"missing_aspects", {"everything"}}, {"new_subqueries", spawned}}}},
       })}};
  return parse_script(script);
}

}  // namespace fixtures
