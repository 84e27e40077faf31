#include <doctest.h>

#include "appagent/core/errors.hpp"
#include "appagent/core/ops.hpp"
#include "appagent/reasoning/scripted.hpp"
#include "fixtures.hpp"

using namespace appagent;

namespace {

TaskRequest request(const std::string& q) {
  TaskRequest r;
  r.task_id = derive_task_id(q, ModeHint::kAuto);
  r.query_text = q;
  return r;
}

std::vector<AppDescriptor> demo_apps() {
  std::vector<AppDescriptor> out;
  for (const auto& a : fixtures::demo_catalog()) out.push_back(a.descriptor);
  return out;
}

const std::vector<std::string> kApps{"video", "shop"};

EvidenceItem item(std::string id, std::string app) {
  EvidenceItem e;
  e.evidence_id = std::move(id);
  e.app_id = std::move(app);
  e.title = "t";
  e.trace_indices = {0};
  return e;
}

ScriptedResponses one_entry(StimulusKind kind, Json response) {
  ScriptedResponses s;
  s.entries.push_back(ScriptEntry{kind, std::nullopt, std::nullopt, true, std::move(response)});
  return s;
}

}  // namespace

TEST_CASE("assess on the scenario script") {
  ScriptedBackend backend(fixtures::scenario_script());
  const auto direct = backend.assess(request(fixtures::kScenario1), demo_apps(), {});
  CHECK_FALSE(direct.needs_external);
  CHECK(direct.base_answer == "There are 24 hours in one day.");
  CHECK(direct.subtasks.empty());

  const auto cat = backend.assess(request(fixtures::kScenario3), demo_apps(), {});
  REQUIRE(cat.subtasks.size() == 2);
  CHECK(cat.subtasks[0].app_id == "video");
  CHECK(cat.subtasks[0].seed_query == "Beginner's guide to keeping a cat");
  CHECK(cat.subtasks[1].app_id == "shop");
  CHECK(cat.subtasks[0].priority < cat.subtasks[1].priority);
  CHECK(check_plan(cat).empty());

  // Queries match after normalization.
  CHECK_FALSE(backend.assess(request("  how to KEEP a cat "), demo_apps(), {}).subtasks.empty());
}

TEST_CASE("empty script with error policy misses") {
  ScriptedBackend backend(ScriptedResponses{});
  CHECK_THROWS_AS(backend.assess(request("anything"), demo_apps(), {}), ScriptMiss);
  CHECK_THROWS_AS(backend.assess(request("anything"), demo_apps(), {}), MalformedBackendOutput);
}

TEST_CASE("fallback policy") {
  ScriptedResponses s;
  s.default_policy = ScriptPolicy::kFallback;
  s.fallback_answer = "canned";
  ScriptedBackend backend(s);
  const auto plan = backend.assess(request("anything"), demo_apps(), {});
  CHECK_FALSE(plan.needs_external);
  CHECK(plan.base_answer == "canned");
}

TEST_CASE("scripted determinism and digest dispatch") {
  const auto req = request("q");
  const ReasoningStimulus a{StimulusKind::kAssess, assess_payload(req, demo_apps(), {})};
  auto other_apps = demo_apps();
  other_apps.pop_back();
  const ReasoningStimulus b{StimulusKind::kAssess, assess_payload(req, other_apps, {})};
  REQUIRE(a.digest() != b.digest());

  ScriptedResponses s;
  s.entries.push_back(ScriptEntry{StimulusKind::kAssess, a.digest(), std::nullopt, false,
                                  Json{{"needs_external", false}, {"base_answer", "from a"}}});
  s.entries.push_back(ScriptEntry{StimulusKind::kAssess, b.digest(), std::nullopt, false,
                                  Json{{"needs_external", false}, {"base_answer", "from b"}}});
  ScriptedBackend backend(s);
  CHECK(backend.respond(a)["base_answer"] == "from a");
  CHECK(backend.respond(b)["base_answer"] == "from b");
  CHECK(backend.respond(a).dump() == backend.respond(a).dump());
  CHECK(backend.assess(req, other_apps, {}).base_answer == "from b");
}

TEST_CASE("script file round trip") {
  const auto s = fixtures::scenario_script();
  CHECK(script_to_json(parse_script(script_to_json(s))) == script_to_json(s));
  CHECK_THROWS_AS(parse_script(Json::parse(R"({"entries":[{"kind":"assess","response":{}}]})")), SchemaError);
  CHECK_THROWS_AS(parse_script(Json::parse(R"({"default_policy":"maybe"})")), SchemaError);
}

TEST_CASE("placeholders expand from the payload") {
  ScriptedBackend backend(one_entry(
      StimulusKind::kJudge,
      Json{{"sufficient", false}, {"new_subqueries", {{{"app_id", "video"}, {"query", "{query} round {round}"}}}}}));
  const auto j = backend.judge(request("cats"), {}, kApps, 2);
  REQUIRE(j.new_subqueries.size() == 1);
  CHECK(j.new_subqueries[0].second == "cats round 2");
}

TEST_CASE("expand") {
  ScriptedBackend backend(fixtures::scenario_script());
  const auto cat = backend.assess(request(fixtures::kScenario3), demo_apps(), {});
  const auto subs = backend.expand(request(fixtures::kScenario3), cat, kApps, 8);
  REQUIRE(subs.size() == 2);
  CHECK(subs[0].first == "video");
  CHECK(subs[1].first == "shop");

  SUBCASE("duplicates collapse") {
    ScriptedBackend dup(one_entry(StimulusKind::kExpand,
                                  Json{{"subqueries",
                                        {{{"app_id", "video"}, {"query", "Cat toys"}},
                                         {{"app_id", "video"}, {"query", "cat toys?"}}}}}));
    CHECK(dup.expand(request("x"), cat, kApps, 8).size() == 1);
  }
  SUBCASE("truncated to Q") {
    const int q = 3;
    Json list = Json::array();
    for (int i = 0; i < q + 5; ++i) list.push_back(Json{{"app_id", "shop"}, {"query", "item " + std::to_string(i)}});
    ScriptedBackend many(one_entry(StimulusKind::kExpand, Json{{"subqueries", list}}));
    const auto out = many.expand(request("x"), cat, kApps, q);
    REQUIRE(out.size() == static_cast<size_t>(q));
    CHECK(out.back().second == "item 2");
  }
  SUBCASE("unregistered app") {
    ScriptedBackend bad(one_entry(StimulusKind::kExpand, Json{{"subqueries", {{{"app_id", "maps"}, {"query", "x"}}}}}));
    CHECK_THROWS_AS(bad.expand(request("x"), cat, kApps, 8), MalformedBackendOutput);
  }
}

TEST_CASE("judge") {
  SUBCASE("empty evidence gets a follow-up") {
    ScriptedBackend backend(one_entry(
        StimulusKind::kJudge,
        Json{{"sufficient", false}, {"missing_aspects", {"care"}}, {"new_subqueries", {{{"app_id", "video"}, {"query", "cat care"}}}}}));
    const auto j = backend.judge(request("cats"), {}, kApps, 1);
    CHECK_FALSE(j.sufficient);
    CHECK(j.new_subqueries.size() == 1);
  }
  SUBCASE("sufficient carries nothing new") {
    ScriptedBackend backend(one_entry(StimulusKind::kJudge, Json{{"sufficient", true}}));
    const auto j = backend.judge(request("cats"), {item("ev-0001", "video")}, kApps, 1);
    CHECK(j.sufficient);
    CHECK(j.new_subqueries.empty());
  }
  SUBCASE("sufficient with new sub-queries is rejected") {
    ScriptedBackend backend(
        one_entry(StimulusKind::kJudge, Json{{"sufficient", true}, {"new_subqueries", {{{"app_id", "video"}, {"query", "x"}}}}}));
    CHECK_THROWS_AS(backend.judge(request("cats"), {}, kApps, 1), MalformedBackendOutput);
  }
}

TEST_CASE("synthesize") {
  ScriptedResponses s;
  s.default_policy = ScriptPolicy::kFallback;
  SUBCASE("no evidence passes the base answer through without a call") {
    ScriptedBackend backend(ScriptedResponses{});  // would throw on any call
    const auto out = backend.synthesize(request("hours"), "24 hours.", {});
    CHECK(out.summary == "24 hours.");
    CHECK(out.sections.empty());
  }
  SUBCASE("fallback groups by app") {
    ScriptedBackend backend(s);
    const std::vector<EvidenceItem> ev{item("ev-0001", "video"), item("ev-0002", "video"), item("ev-0003", "shop"),
                                       item("ev-0004", "shop")};
    const auto out = backend.synthesize(request(fixtures::kScenario3), "base", ev);
    REQUIRE(out.sections.size() == 2);
    CHECK(out.sections[0].evidence_ids == std::vector<std::string>{"ev-0001", "ev-0002"});
    CHECK(out.sections[1].evidence_ids == std::vector<std::string>{"ev-0003", "ev-0004"});
  }
  SUBCASE("unknown evidence id") {
    ScriptedBackend backend(one_entry(StimulusKind::kSynthesize,
                                      Json{{"summary", "s"}, {"sections", {{{"app_id", "video"}, {"evidence_ids", {"ev-9"}}}}}}));
    CHECK_THROWS_AS(backend.synthesize(request("x"), "b", {item("ev-0001", "video")}), MalformedBackendOutput);
  }
  SUBCASE("evidence cited twice") {
    ScriptedBackend backend(one_entry(
        StimulusKind::kSynthesize,
        Json{{"summary", "s"},
             {"sections", {{{"app_id", "video"}, {"evidence_ids", {"ev-0001"}}}, {{"app_id", "shop"}, {"evidence_ids", {"ev-0001"}}}}}}));
    CHECK_THROWS_AS(backend.synthesize(request("x"), "b", {item("ev-0001", "video")}), MalformedBackendOutput);
  }
}

TEST_CASE("summarize_task") {
  ScriptedResponses s;
  s.default_policy = ScriptPolicy::kFallback;
  ScriptedBackend backend(s);
  CHECK_FALSE(backend.summarize_task(ExecutionTrace{}, IntegratedResponse{}).empty());

  fixtures::Harness h;
  const auto r = h.run(fixtures::kScenario2);
  REQUIRE(r.phase == TaskPhase::kDone);
  CHECK(backend.summarize_task(r.trace, r.response).find("video") != std::string::npos);

  ScriptedBackend wordy(one_entry(StimulusKind::kSummarize, Json{{"note", std::string(5000, 'x')}}));
  const auto note = wordy.summarize_task(ExecutionTrace{}, IntegratedResponse{});
  CHECK(note.size() == kMaxOutcomeNoteChars);
  CHECK(note.substr(note.size() - 3) == "...");
}

TEST_CASE("clamp_note keeps UTF-8 intact") {
  std::string s;
  while (s.size() < 2100) s += "\xC3\xA9";  // é
  const auto out = clamp_note(s);
  CHECK(out.size() <= kMaxOutcomeNoteChars);
  const auto body = out.substr(0, out.size() - 3);
  CHECK(body.size() % 2 == 0);
  CHECK(clamp_note("short") == "short");
}

TEST_CASE("RecordingPort counts calls") {
  ScriptedBackend backend(fixtures::scenario_script());
  RecordingPort port(backend);
  port.assess(request(fixtures::kScenario1), demo_apps(), {});
  port.synthesize(request(fixtures::kScenario1), "x", {});
  CHECK(port.count(StimulusKind::kAssess) == 1);
  CHECK(port.count(StimulusKind::kSynthesize) == 1);
  CHECK(port.calls() == std::vector<StimulusKind>{StimulusKind::kAssess, StimulusKind::kSynthesize});
}
