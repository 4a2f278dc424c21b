#include "lageffect/keyvalue.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lageffect {

namespace {

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

bool KvSection::has(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return true;
  }
  return false;
}

std::string KvSection::get(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  throw Error(errc::invalid_config,
              "section [" + kind + (arg.empty() ? "" : " " + arg) + "] is missing key '" +
                  key + "'");
}

std::string KvSection::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double KvSection::get_double(const std::string& key) const {
  const std::string v = get(key);
  char* end = nullptr;
  const double r = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw Error(errc::invalid_config, "key '" + key + "': '" + v + "' is not a number");
  }
  return r;
}

double KvSection::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int KvSection::get_int(const std::string& key) const {
  const double v = get_double(key);
  const int r = static_cast<int>(v);
  if (static_cast<double>(r) != v) {
    throw Error(errc::invalid_config, "key '" + key + "' must be an integer");
  }
  return r;
}

int KvSection::get_int_or(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

const KvSection* KvDocument::find(const std::string& kind) const {
  for (const auto& s : sections) {
    if (s.kind == kind) return &s;
  }
  return nullptr;
}

const KvSection& KvDocument::require(const std::string& kind) const {
  const KvSection* s = find(kind);
  if (!s) throw Error(errc::invalid_config, "missing section [" + kind + "]");
  return *s;
}

std::vector<const KvSection*> KvDocument::all(const std::string& kind) const {
  std::vector<const KvSection*> out;
  for (const auto& s : sections) {
    if (s.kind == kind) out.push_back(&s);
  }
  return out;
}

KvDocument KvDocument::parse(const std::string& text) {
  KvDocument doc;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(errc::invalid_config, "line " + std::to_string(line_no) + ": bad section");
      }
      const std::string inner = strip(line.substr(1, line.size() - 2));
      KvSection section;
      auto space = inner.find_first_of(" \t");
      if (space == std::string::npos) {
        section.kind = inner;
      } else {
        section.kind = strip(inner.substr(0, space));
        section.arg = strip(inner.substr(space + 1));
      }
      doc.sections.push_back(std::move(section));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos || doc.sections.empty()) {
      throw Error(errc::invalid_config,
                  "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    doc.sections.back().entries.emplace_back(strip(line.substr(0, eq)),
                                             strip(line.substr(eq + 1)));
  }
  return doc;
}

KvDocument KvDocument::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  auto flush = [&]() {
    const std::string t = strip(cur);
    if (!t.empty()) out.push_back(t);
    cur.clear();
  };
  for (char c : value) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if ((c == ',' || ((c == ' ' || c == '\t') && depth == 0)) && depth == 0) {
      flush();
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

std::vector<std::pair<std::string, double>> parse_named_values(const std::string& value) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& token : split_list(value)) {
    auto colon = token.find(':');
    if (colon == std::string::npos) {
      throw Error(errc::invalid_config, "expected name:value, got '" + token + "'");
    }
    const std::string name = strip(token.substr(0, colon));
    const std::string num = strip(token.substr(colon + 1));
    char* end = nullptr;
    const double v = std::strtod(num.c_str(), &end);
    if (num.empty() || end != num.c_str() + num.size()) {
      throw Error(errc::invalid_config, "bad value in '" + token + "'");
    }
    out.emplace_back(name, v);
  }
  return out;
}

}  // namespace lageffect
