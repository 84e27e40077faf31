#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "appagent/appdriver/catalog.hpp"
#include "appagent/appdriver/simulated.hpp"
#include "appagent/core/errors.hpp"
#include "appagent/core/ops.hpp"
#include "appagent/engine/engine.hpp"
#include "appagent/integrate/integrate.hpp"
#include "appagent/reasoning/scripted.hpp"

namespace py = pybind11;
using namespace appagent;

namespace {

std::vector<std::string> rank_items(const std::string& query, const std::string& items_json, int page_size) {
  std::vector<CatalogItem> items;
  for (const auto& j : Json::parse(items_json)) {
    items.push_back(CatalogItem{j.at("item_id").get<std::string>(), j.at("title").get<std::string>(),
                                j.value("content", ""), j.value("tags", std::vector<std::string>{})});
  }
  return rank(query, items, page_size);
}

// Runs one task against a simulated catalog and a scripted backend. Returns
// {"phase", "response", "trace", "trace_digest", "events", "error_kind", "error_message"}.
std::string run(const std::string& query, const std::string& catalog_json, const std::string& script_json,
                const std::string& mode, const std::string& budgets) {
  SimulatedEnvironment env(parse_catalog(catalog_json));
  ScriptedBackend backend(parse_script(Json::parse(script_json)));
  TaskRequest req;
  req.query_text = query;
  req.mode_hint = parse_mode_hint(mode);
  req.task_id = derive_task_id(query, req.mode_hint);
  EventLog events(req.task_id);
  TaskResult r = run_task(req, Ports{backend, env, nullptr}, parse_budget_spec(budgets), events);
  Json kinds = Json::array();
  for (const auto& e : events.snapshot()) kinds.push_back(e.kind());
  Json out{{"phase", to_string(r.phase)},
           {"trace", r.trace},
           {"trace_digest", trace_digest(r.trace)},
           {"events", kinds},
           {"error_kind", r.error_kind},
           {"error_message", r.error_message}};
  out["response"] = r.phase == TaskPhase::kDone ? Json(r.response) : Json(nullptr);
  return out.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Proactive app agent pipeline (C++ core)";

  py::register_exception<Error>(m, "AgentError", PyExc_RuntimeError);

  m.def("normalize_query", [](const std::string& q) { return normalize_query(q); });
  m.def("rank", &rank_items, py::arg("query"), py::arg("items_json"), py::arg("page_size"));
  m.def("trace_digest", [](const std::string& trace_json) { return trace_digest(decode<ExecutionTrace>(Json::parse(trace_json))); });
  m.def("render_text", [](const std::string& response_json) {
    return render_text(decode<IntegratedResponse>(Json::parse(response_json)));
  });
  m.def("canonical", [](const std::string& json_text) { return Json::parse(json_text).dump(); });
  m.def("derive_task_id", [](const std::string& q, const std::string& mode) { return derive_task_id(q, parse_mode_hint(mode)); });
  m.def(
      "run_task",
      [](const std::string& query, const std::string& catalog_json, const std::string& script_json,
         const std::string& mode, const std::string& budgets) {
        py::gil_scoped_release release;
        return run(query, catalog_json, script_json, mode, budgets);
      },
      py::arg("query"), py::arg("catalog_json"), py::arg("script_json"), py::arg("mode") = "auto",
      py::arg("budgets") = "");
}
