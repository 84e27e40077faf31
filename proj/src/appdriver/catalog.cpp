#include "appagent/appdriver/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <tuple>

#include "appagent/core/errors.hpp"
#include "appagent/core/ops.hpp"

namespace appagent {

std::string to_string(Capability c) {
  switch (c) {
    case Capability::kSearch:
      return "search";
    case Capability::kOpen:
      return "open";
    case Capability::kExtract:
      return "extract";
    case Capability::kScreenshot:
      return "screenshot";
  }
  return "search";
}

Capability parse_capability(std::string_view s) {
  if (s == "search") return Capability::kSearch;
  if (s == "open") return Capability::kOpen;
  if (s == "extract") return Capability::kExtract;
  if (s == "screenshot") return Capability::kScreenshot;
  throw CatalogParseError("unknown capability: " + std::string(s));
}

namespace {

AppCatalog parse_app(const Json& j) {
  AppCatalog app;
  app.descriptor.app_id = j.at("app_id").get<std::string>();
  if (app.descriptor.app_id.empty()) throw CatalogParseError("empty app_id");
  app.descriptor.display_name = j.value("display_name", app.descriptor.app_id);
  app.page_size = j.value("page_size", 5);
  if (app.page_size < 1) throw CatalogParseError(app.descriptor.app_id + ": page_size must be >= 1");

  if (j.contains("capabilities")) {
    for (const auto& c : j.at("capabilities")) app.descriptor.capabilities.insert(parse_capability(c.get<std::string>()));
  } else {
    app.descriptor.capabilities = {Capability::kSearch, Capability::kOpen, Capability::kExtract,
                                   Capability::kScreenshot};
  }
  if (!app.descriptor.capabilities.contains(Capability::kSearch)) {
    throw CatalogParseError(app.descriptor.app_id + ": search capability is required");
  }

  std::set<std::string> ids;
  for (const auto& ji : j.value("items", Json::array())) {
    CatalogItem item;
    item.item_id = ji.at("item_id").get<std::string>();
    item.title = ji.at("title").get<std::string>();
    item.content = ji.value("content", "");
    item.tags = ji.value("tags", std::vector<std::string>{});
    if (item.title.empty()) throw CatalogParseError(app.descriptor.app_id + "/" + item.item_id + ": empty title");
    if (!ids.insert(item.item_id).second) {
      throw CatalogParseError(app.descriptor.app_id + ": duplicate item_id " + item.item_id);
    }
    app.items.push_back(std::move(item));
  }
  return app;
}

}  // namespace

std::vector<AppCatalog> parse_catalog(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw CatalogParseError(std::string("catalog is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw CatalogParseError("catalog must be a JSON list of apps");
  if (doc.empty()) throw CatalogParseError("catalog defines no apps");

  std::vector<AppCatalog> apps;
  std::set<std::string> seen;
  for (const auto& entry : doc) {
    AppCatalog app;
    try {
      app = parse_app(entry);
    } catch (const Json::exception& e) {
      throw CatalogParseError(std::string("malformed app entry: ") + e.what());
    }
    if (!seen.insert(app.descriptor.app_id).second) throw DuplicateApp("duplicate app_id: " + app.descriptor.app_id);
    apps.push_back(std::move(app));
  }
  return apps;
}

std::vector<AppCatalog> load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CatalogParseError("cannot read catalog " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_catalog(buf.str());
}

void to_json(Json& j, const AppDescriptor& d) {
  Json caps = Json::array();
  for (auto c : d.capabilities) caps.push_back(to_string(c));
  j = Json{{"app_id", d.app_id}, {"display_name", d.display_name}, {"capabilities", caps}};
}

void to_json(Json& j, const ScreenSnapshot& s) {
  j = Json{{"app_id", s.app_id}, {"observation", s.observation}, {"screenshot", s.screenshot}};
}

Json catalog_to_json(const std::vector<AppCatalog>& apps) {
  Json out = Json::array();
  for (const auto& app : apps) {
    Json caps = Json::array();
    for (auto c : app.descriptor.capabilities) caps.push_back(to_string(c));
    Json items = Json::array();
    for (const auto& item : app.items) {
      items.push_back(Json{{"item_id", item.item_id}, {"title", item.title}, {"content", item.content}, {"tags", item.tags}});
    }
    out.push_back(Json{{"app_id", app.descriptor.app_id},
                       {"display_name", app.descriptor.display_name},
                       {"page_size", app.page_size},
                       {"capabilities", caps},
                       {"items", items}});
  }
  return out;
}

std::set<std::string> tokenize(std::string_view text) {
  std::set<std::string> out;
  std::string cur;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      out.insert(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(std::move(cur));
  return out;
}

std::vector<std::string> rank(std::string_view query, const std::vector<CatalogItem>& items, int page_size) {
  const auto q = tokenize(normalize_query(query));
  struct Scored {
    int score;
    const CatalogItem* item;
  };
  std::vector<Scored> scored;
  for (const auto& item : items) {
    std::string haystack = item.title;
    for (const auto& tag : item.tags) haystack += " " + tag;
    const auto t = tokenize(haystack);
    const int score = static_cast<int>(std::count_if(q.begin(), q.end(), [&](const auto& tok) { return t.contains(tok); }));
    if (score > 0) scored.push_back({score, &item});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    return std::forward_as_tuple(-a.score, a.item->title, a.item->item_id) <
           std::forward_as_tuple(-b.score, b.item->title, b.item->item_id);
  });
  std::vector<std::string> ids;
  for (size_t i = 0; i < scored.size() && static_cast<int>(i) < page_size; ++i) ids.push_back(scored[i].item->item_id);
  return ids;
}

}  // namespace appagent
