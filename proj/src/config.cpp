#include "attrloss/config.hpp"

#include <fstream>
#include <sstream>

#include "attrloss/error.hpp"

namespace attrloss {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    Entry entry;
    const std::string bare = trim(t.substr(0, eq));
    if (bare.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    entry.key = section.empty() ? bare : section + "." + bare;
    entry.value = trim(t.substr(eq + 1));
    entry.line = line_no;
    if (cfg.index_.count(entry.key) != 0) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + entry.key +
                        "'");
    }
    cfg.index_[entry.key] = cfg.entries_.size();
    cfg.entries_.push_back(std::move(entry));
  }
  return cfg;
}

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path.string());
}

bool ConfigFile::has(const std::string& key) const { return index_.count(key) != 0; }

std::optional<std::string> ConfigFile::get(const std::string& key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].value;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    return std::stod(*v);
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a number: " + *v);
  }
}

std::int64_t ConfigFile::get_int(const std::string& key, std::int64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    return std::stoll(*v);
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an integer: " + *v);
  }
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  const auto v = get(key);
  return v ? *v : fallback;
}

std::vector<std::int64_t> ConfigFile::get_int_list(
    const std::string& key, const std::vector<std::int64_t>& fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::vector<std::int64_t> out;
  std::istringstream in(*v);
  std::string token;
  while (in >> token) {
    try {
      out.push_back(std::stoll(token));
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": key '" + key + "' has a non-integer element: " + token);
    }
  }
  return out;
}

void ConfigFile::require_known(const std::set<std::string>& known) const {
  for (const Entry& e : entries_) {
    if (known.count(e.key) == 0) {
      throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
  }
}

}  // namespace attrloss
