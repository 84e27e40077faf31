// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <httplib.h>

#include "appagent/core/ops.hpp"
#include "fixtures.hpp"
#include "process.hpp"

using namespace appagent;
using fixtures::Harness;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int failures = 0;

/// Runs `body`; a limit of 0 means no time bound.
void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double took = seconds_since(start);
  if (limit_s > 0 && took >= limit_s) o.expect(false, "took longer than the limit");
  char timing[64];
  if (limit_s > 0) {
    std::snprintf(timing, sizeof timing, "%.3f s, limit %.0f s", took, limit_s);
  } else {
    std::snprintf(timing, sizeof timing, "%.3f s", took);
  }
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << timing << ")";
  if (!o.detail.empty()) std::cout << ": " << o.detail;
  std::cout << std::endl;
  failures += o.pass ? 0 : 1;
}

std::vector<std::string> kinds(const EventLog& log) {
  std::vector<std::string> out;
  for (const auto& e : log.snapshot()) out.push_back(e.kind());
  return out;
}

template <typename A>
int count_actions(const ExecutionTrace& t) {
  int n = 0;
  for (const auto& s : t.steps) n += std::holds_alternative<A>(s.action) ? 1 : 0;
  return n;
}

// Page bounds observed across the property suites, checked by their own criterion.
struct PageAudit {
  int subqueries = 0;
  int violations = 0;
  std::string first;

  void add(const ExecutionTrace& t, int p) {
    for (const auto& [q, pages] : t.counters.pages_opened_per_subquery) {
      ++subqueries;
      if (pages > p && violations++ == 0) first = "'" + q + "' opened " + std::to_string(pages) + " > P=" + std::to_string(p);
    }
    if (recompute_counters(t) != t.counters && violations++ == 0) first = "counters disagree with the trace";
  }
} pages;

// Independent scorer: lowercase, split on anything outside [a-z0-9], count query words present.
std::vector<std::string> brute_rank(const std::string& query, const std::vector<CatalogItem>& items, int n) {
  auto words = [](std::string s) {
    for (auto& c : s) {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))) c = ' ';
    }
    std::istringstream in(s);
    std::set<std::string> out;
    for (std::string w; in >> w;) out.insert(w);
    return out;
  };
  const auto q = words(query);
  std::vector<std::tuple<int, std::string, std::string>> scored;
  for (const auto& item : items) {
    std::string text = item.title;
    for (const auto& t : item.tags) text += " " + t;
    const auto w = words(text);
    int score = 0;
    for (const auto& t : q) score += static_cast<int>(w.count(t));
    if (score > 0) scored.emplace_back(-score, item.title, item.item_id);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> out;
  for (const auto& [s, title, id] : scored) {
    if (static_cast<int>(out.size()) == n) break;
    out.push_back(id);
  }
  return out;
}

std::vector<std::string> agent_args(std::vector<std::string> tail) {
  std::vector<std::string> argv{APPAGENT_AGENT_EXE};
  argv.insert(argv.end(), tail.begin(), tail.end());
  for (std::string flag : {"--catalog", "--backend"}) {
    argv.push_back(flag);
    argv.push_back(flag == "--catalog" ? fixtures::path("catalog.json").string()
                                       : "scripted:" + fixtures::path("scenarios.json").string());
  }
  return argv;
}

std::string digest_line(const std::string& err) {
  const auto at = err.find("trace_digest ");
  if (at == std::string::npos) return "";
  return err.substr(at, err.find('\n', at) - at);
}

}  // namespace

int main() {
  const std::vector<std::string> scenarios{fixtures::kScenario1, fixtures::kScenario2, fixtures::kScenario3};

  criterion("scenario 1: direct answer without app actions", 1, [] {
    Outcome o;
    Harness h;
    const auto r = h.run(fixtures::kScenario1);
    o.expect(r.phase == TaskPhase::kDone, "task did not finish: " + r.error_message);
    o.expect(r.trace.steps.empty(), "app actions were performed");
    o.expect(r.response.sections.empty() && r.response.attachments.empty(), "response is not summary-only");
    o.expect(r.response.summary == "There are 24 hours in one day.", "unexpected summary: " + r.response.summary);
    o.expect(kinds(*h.events) ==
                 std::vector<std::string>{"task_accepted", "comprehension_done", "integration_done", "task_completed"},
             "event sequence differs");
    return o;
  });

  criterion("scenario 2: one session, pinned screenshot", 1, [] {
    Outcome o;
    Harness h;
    const auto r = h.run(fixtures::kScenario2);
    o.expect(r.phase == TaskPhase::kDone, "task did not finish: " + r.error_message);
    o.expect(count_actions<action::Launch>(r.trace) == 1, "expected exactly one app session");
    bool pinned = false;
    for (const auto& [id, a] : r.response.attachments) {
      pinned |= sha256_hex(a.bytes) == "2a2d909980a7224503f3f2d72393622a2e2e2698137101b1314d91a8b85aa377";
    }
    o.expect(!r.response.attachments.empty(), "no screenshot attachment");
    o.expect(pinned, "no attachment matches the pinned SIMSHOT digest");
    return o;
  });

  criterion("scenario 3: two apps, sections in priority order, full provenance", 2, [] {
    Outcome o;
    Harness h;
    const auto r = h.run(fixtures::kScenario3);
    o.expect(r.phase == TaskPhase::kDone, "task did not finish: " + r.error_message);
    std::set<std::string> apps;
    for (const auto& s : r.trace.steps) apps.insert(s.app_id);
    o.expect(apps == std::set<std::string>{"video", "shop"}, "engaged apps differ");
    o.expect(r.response.sections.size() == 2, "expected one section per app");
    for (const auto& e : r.evidence) {
      auto it = r.response.provenance.find(e.evidence_id);
      o.expect(it != r.response.provenance.end(), e.evidence_id + " has no provenance");
      if (it != r.response.provenance.end()) {
        o.expect(it->second == (e.app_id == "video" ? 0 : 1), e.evidence_id + " is in the wrong section");
      }
    }
    o.expect(!r.evidence.empty(), "no evidence gathered");
    o.expect(check_response(r.response).empty(), "response invariants violated");
    return o;
  });

  criterion("deep loop terminates under adversarial scripts (100 budgets)", 30, [] {
    Outcome o;
    std::mt19937 rng(20250);
    int actions = 0;
    int judged = 0;
    for (int i = 0; i < 100 && o.pass; ++i) {
      auto cat = fixtures::random_catalog(rng);
      Budgets b;
      b.pages_per_subquery = 1 + static_cast<int>(rng() % 4);
      b.max_rounds = 1 + static_cast<int>(rng() % 5);
      b.max_subqueries = 1 + static_cast<int>(rng() % 10);
      b.max_actions = 1 + static_cast<int>(rng() % 120);
      Harness h(cat, fixtures::adversarial_script(cat, ExecMode::kDeep));
      const auto r = h.run(fixtures::random_query(rng), ModeHint::kDeep, b);
      const std::string at = "case " + std::to_string(i) + ": ";
      o.expect(r.phase == TaskPhase::kDone, at + "did not complete: " + r.error_message);
      o.expect(r.trace.counters.actions_total <= b.max_actions, at + "actions exceed A");
      o.expect(static_cast<int>(h.port.count(StimulusKind::kJudge)) <= b.max_rounds, at + "judge calls exceed R");
      std::set<std::string> executed;
      for (const auto& s : r.trace.steps) executed.insert(s.subtask_id);
      o.expect(static_cast<int>(executed.size()) <= b.max_subqueries, at + "sub-queries exceed Q");
      pages.add(r.trace, b.pages_per_subquery);
      actions += r.trace.counters.actions_total;
      judged += static_cast<int>(h.port.count(StimulusKind::kJudge));
    }
    if (o.pass) o.detail = std::to_string(actions) + " actions, " + std::to_string(judged) + " judge calls";
    return o;
  });

  criterion("shallow purity (200 random cases)", 30, [] {
    Outcome o;
    std::mt19937 rng(777);
    for (int i = 0; i < 200 && o.pass; ++i) {
      auto cat = fixtures::random_catalog(rng);
      Harness h(cat, fixtures::adversarial_script(cat, rng() % 2 ? ExecMode::kDeep : ExecMode::kShallow));
      const auto r = h.run(fixtures::random_query(rng), ModeHint::kShallow);
      const std::string at = "case " + std::to_string(i) + ": ";
      o.expect(r.phase == TaskPhase::kDone, at + "did not complete: " + r.error_message);
      o.expect(count_actions<action::OpenResult>(r.trace) == 0, at + "opened a result");
      o.expect(count_actions<action::ExtractContent>(r.trace) == 0, at + "extracted content");
      for (const auto& e : r.evidence) o.expect(e.depth == 0, at + "evidence deeper than titles");
      pages.add(r.trace, Budgets{}.pages_per_subquery);
    }
    return o;
  });

  criterion("pages per sub-query never exceed P", 0, [] {
    Outcome o;
    o.expect(pages.subqueries > 0, "no sub-queries were audited");
    o.expect(pages.violations == 0, pages.first);
    if (o.pass) o.detail = std::to_string(pages.subqueries) + " sub-queries";
    return o;
  });

  criterion("determinism: repeated agent run output", 0, [&] {
    Outcome o;
    for (const auto& q : scenarios) {
      const auto a = fixtures::run_process(agent_args({"run", q, "--json"}));
      const auto b = fixtures::run_process(agent_args({"run", q, "--json"}));
      o.expect(a.exit_code == 0 && b.exit_code == 0, "agent run failed for '" + q + "': " + a.err);
      o.expect(!a.out.empty() && a.out == b.out, "--json output differs for '" + q + "'");
      o.expect(!digest_line(a.err).empty() && digest_line(a.err) == digest_line(b.err),
               "trace_digest differs for '" + q + "'");
    }
    return o;
  });

  criterion("personalization: replay saves reasoning calls, mutation falls back", 0, [] {
    Outcome o;
    HistoryStore history;
    Harness cold;
    const auto a = cold.run(fixtures::kScenario3, ModeHint::kAuto, {}, &history);
    Harness warm;
    const auto b = warm.run(fixtures::kScenario3, ModeHint::kAuto, {}, &history);
    o.expect(a.phase == TaskPhase::kDone && b.phase == TaskPhase::kDone, "a run did not finish");
    o.expect(warm.port.calls().size() < cold.port.calls().size(), "second run made as many reasoning calls");
    o.expect(b.trace.counters.actions_total <= a.trace.counters.actions_total, "second run took more actions");
    auto evidence = [](const TaskResult& r) {
      std::set<std::string> s;
      for (const auto& e : r.evidence) s.insert(e.app_id + "|" + e.title + "|" + e.snippet);
      return s;
    };
    o.expect(evidence(a) == evidence(b), "evidence sets differ");

    auto mutated = fixtures::demo_catalog();
    for (auto& app : mutated) std::erase_if(app.items, [](const CatalogItem& i) { return i.item_id == "s2"; });
    Harness changed(mutated);
    const auto c = changed.run(fixtures::kScenario3, ModeHint::kAuto, {}, &history);
    const bool diverged = std::any_of(c.replays.begin(), c.replays.end(), [](const ReplayNote& n) { return n.diverged; });
    o.expect(diverged, "mutated catalog did not diverge");
    o.expect(c.phase == TaskPhase::kDone, "fallback run did not finish");
    o.expect(check_trace(c.trace).empty() && check_response(c.response).empty(), "fallback run violates invariants");
    return o;
  });

  criterion("ranking equals brute force (100 random catalogs)", 0, [] {
    Outcome o;
    std::mt19937 rng(31337);
    for (int i = 0; i < 100 && o.pass; ++i) {
      const auto items = fixtures::random_items(rng, static_cast<int>(rng() % 51));
      const int n = 1 + static_cast<int>(rng() % 10);
      const auto q = fixtures::random_query(rng);
      o.expect(rank(q, items, n) == brute_rank(q, items, n), "mismatch on case " + std::to_string(i) + " ('" + q + "')");
    }
    return o;
  });

  criterion("CLI and HTTP give identical responses", 0, [&] {
    Outcome o;
    fixtures::ServeProcess serve(agent_args({"serve", "--listen", "127.0.0.1:0"}));
    o.expect(serve.port() > 0, "serve did not report a port: '" + serve.readiness() + "'");
    if (!o.pass) return o;
    httplib::Client client("127.0.0.1", serve.port());
    client.set_read_timeout(std::chrono::seconds(30));
    for (const auto& q : scenarios) {
      const auto cli = fixtures::run_process(agent_args({"run", q, "--json"}));
      o.expect(cli.exit_code == 0, "agent run failed for '" + q + "'");
      auto posted = client.Post("/tasks", Json{{"query", q}}.dump(), "application/json");
      o.expect(posted && posted->status == 202, "POST /tasks failed for '" + q + "'");
      if (!o.pass) return o;
      const std::string id = Json::parse(posted->body)["task_id"];
      auto stream = client.Get("/tasks/" + id + "/events");  // returns once the task ends
      o.expect(stream && stream->status == 200, "event stream failed");
      auto result = client.Get("/tasks/" + id + "/result");
      o.expect(result && result->status == 200, "GET result failed for '" + q + "'");
      if (!o.pass) return o;
      o.expect(result->body + "\n" == cli.out, "responses differ for '" + q + "'");
    }
    o.expect(serve.stop() == 0, "serve did not exit cleanly");
    return o;
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
