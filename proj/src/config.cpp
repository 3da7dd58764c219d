#include "stein4dvar/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace stein4dvar {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '.' || c == '+';
  });
}

std::string strip_comment(const std::string& line) {
  for (std::size_t i = 0; i < line.size(); ++i)
    if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) return line.substr(0, i);
  return line;
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::string& source) {
  ConfigFile cfg;
  cfg.source = source;
  std::istringstream in(text);
  std::string raw;
  long lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source, lineno, "unterminated section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (!valid_name(name)) throw ConfigError(source, lineno, "invalid section name '" + name + "'");
      cfg.sections.push_back({name, lineno, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_name(key)) throw ConfigError(source, lineno, "invalid key '" + key + "'");
    if (value.empty()) throw ConfigError(source, lineno, "missing value for '" + key + "'");
    if (cfg.sections.empty()) throw ConfigError(source, lineno, "entry outside of any section");
    cfg.sections.back().entries.push_back({key, value, lineno});
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

double as_double(const std::string& source, const ConfigEntry& e) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(e.value, &pos);
    if (pos == e.value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(source, e.line, "'" + e.key + "' expects a number, got '" + e.value + "'");
}

long as_long(const std::string& source, const ConfigEntry& e) {
  long v = 0;
  const char* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(source, e.line, "'" + e.key + "' expects an integer, got '" + e.value + "'");
  return v;
}

bool as_bool(const std::string& source, const ConfigEntry& e) {
  if (e.value == "true" || e.value == "on" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "off" || e.value == "no" || e.value == "0") return false;
  throw ConfigError(source, e.line, "'" + e.key + "' expects true or false, got '" + e.value + "'");
}

}  // namespace stein4dvar
