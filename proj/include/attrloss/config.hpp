#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace attrloss {

/// Flat `key = value` configuration with `[section]` headers. Keys are
/// addressed fully qualified as "section.key" ("" section for the
/// preamble). Unknown keys are rejected with their line number.
class ConfigFile {
 public:
  struct Entry {
    std::string key;  // fully qualified
    std::string value;
    int line = 0;
  };

  static ConfigFile parse_file(const std::filesystem::path& path);
  static ConfigFile parse_string(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<std::int64_t> get_int_list(const std::string& key,
                                         const std::vector<std::int64_t>& fallback) const;

  /// Throws ConfigError naming the first key (and line) not in `known`.
  void require_known(const std::set<std::string>& known) const;

  const std::vector<Entry>& entries() const { return entries_; }
  const std::string& origin() const { return origin_; }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
  std::string origin_;
};

}  // namespace attrloss
