#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "appagent/appdriver/port.hpp"
#include "appagent/core/json.hpp"

namespace appagent {

struct CatalogItem {
  std::string item_id;
  std::string title;
  std::string content;
  std::vector<std::string> tags;
};

struct AppCatalog {
  AppDescriptor descriptor;
  int page_size = 5;
  std::vector<CatalogItem> items;
};

/// Parses the catalog document (a JSON list of apps). Throws CatalogParseError
/// or DuplicateApp.
std::vector<AppCatalog> parse_catalog(std::string_view text);
std::vector<AppCatalog> load_catalog(const std::filesystem::path& path);

Json catalog_to_json(const std::vector<AppCatalog>& apps);

/// Lowercased maximal runs of ASCII letters and digits.
std::set<std::string> tokenize(std::string_view text);

/// Token-overlap ranking: score is |tokens(query) ∩ tokens(title + tags)|,
/// sorted by score desc, then title asc, then item_id asc; zero scores are
/// dropped and at most `page_size` ids are returned.
std::vector<std::string> rank(std::string_view query, const std::vector<CatalogItem>& items, int page_size);

}  // namespace appagent
