#pragma once

#include <map>
#include <string>
#include <vector>

namespace rldx {

/// Diagnostic catalog: id -> title, explanation and recommendations. The
/// default is compiled in from data/catalog.json.
class Catalog {
 public:
  struct Entry {
    std::string id;
    std::string title;
    std::string explanation;
    std::vector<std::string> recommendations;
  };

  static const Catalog& builtin();
  /// Throws ConfigError on malformed input.
  static Catalog parse(const std::string& json_text);
  static Catalog load(const std::string& path);

  const Entry* find(const std::string& id) const;
  bool contains(const std::string& id) const { return find(id) != nullptr; }
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace rldx
