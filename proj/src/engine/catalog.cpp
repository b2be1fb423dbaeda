#include "rldx/catalog.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rldx/error.hpp"

namespace rldx {
namespace detail {
extern const char* const kBuiltinCatalog;
}

const Catalog& Catalog::builtin() {
  static const Catalog c = parse(detail::kBuiltinCatalog);
  return c;
}

Catalog Catalog::parse(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("catalog: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("catalog: expected an object keyed by diagnostic id");
  Catalog c;
  for (const auto& [id, body] : doc.items()) {
    if (!body.is_object()) throw ConfigError("catalog: entry '" + id + "' is not an object");
    Entry e;
    e.id = id;
    try {
      e.title = body.at("title").get<std::string>();
      e.explanation = body.value("explanation", std::string());
      if (body.contains("recommendations")) {
        e.recommendations = body.at("recommendations").get<std::vector<std::string>>();
      }
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError("catalog: entry '" + id + "': " + ex.what());
    }
    c.entries_.emplace(id, std::move(e));
  }
  return c;
}

Catalog Catalog::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open catalog file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const Catalog::Entry* Catalog::find(const std::string& id) const {
  const auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> Catalog::ids() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) out.push_back(id);
  return out;
}

}  // namespace rldx
