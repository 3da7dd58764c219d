#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace stein4dvar {

// Error carrying "<source>:<line>: message".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, long line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  long line = 0;
};

struct ConfigSection {
  std::string name;
  long line = 0;
  std::vector<ConfigEntry> entries;
};

// Grammar, one item per line:
//   [name]          section header; name is [A-Za-z0-9_.]+, sections may repeat
//   key = value     key is [A-Za-z0-9_.]+, value runs to the end of the line
//   # ...           comment; also allowed after a value when preceded by a blank
// Blank lines are ignored. Entries before the first header are an error.
struct ConfigFile {
  std::string source;
  std::vector<ConfigSection> sections;

  static ConfigFile parse(const std::string& text, const std::string& source = "<config>");
  static ConfigFile load(const std::string& path);
};

// Typed value conversions that report the entry's line on failure.
std::vector<std::string> split_list(const std::string& value);
double as_double(const std::string& source, const ConfigEntry& e);
long as_long(const std::string& source, const ConfigEntry& e);
bool as_bool(const std::string& source, const ConfigEntry& e);

}  // namespace stein4dvar
