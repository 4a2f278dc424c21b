#pragma once

#include <string>
#include <vector>

#include "lageffect/error.hpp"

namespace lageffect {

// Minimal sectioned key/value document:
//   [section arg]
//   key = value        # trailing comments with '#'
// Section args are optional ("[context 1]" has kind "context", arg "1").
struct KvSection {
  std::string kind;
  std::string arg;
  std::vector<std::pair<std::string, std::string>> entries;

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;  // throws invalid_config when absent
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int_or(const std::string& key, int fallback) const;
};

struct KvDocument {
  std::vector<KvSection> sections;

  const KvSection* find(const std::string& kind) const;        // first match or nullptr
  const KvSection& require(const std::string& kind) const;
  std::vector<const KvSection*> all(const std::string& kind) const;

  static KvDocument parse(const std::string& text);
  static KvDocument parse_file(const std::string& path);
};

// "a, b, c" or "a b c" -> tokens.
std::vector<std::string> split_list(const std::string& value);

// "name:value name:value ..." -> pairs.
std::vector<std::pair<std::string, double>> parse_named_values(const std::string& value);

}  // namespace lageffect
