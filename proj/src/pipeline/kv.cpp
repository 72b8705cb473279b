#include "vtreid/pipeline/kv.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

#include "vtreid/core/error.hpp"

namespace vtreid::pipeline {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  return true;
}

// Drops a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string where(const std::string& key, std::size_t line) {
  return "'" + key + "' (line " + std::to_string(line) + ")";
}

}  // namespace

KvDocument KvDocument::parse(const std::string& text) {
  KvDocument doc;
  std::istringstream in(text);
  std::string raw, section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header (line " + std::to_string(line_no) + ")");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section)) throw ConfigError("bad section name '" + section + "' (line " + std::to_string(line_no) + ")");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value (line " + std::to_string(line_no) + ")");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError("bad key '" + key + "' (line " + std::to_string(line_no) + ")");
    if (value.empty()) throw ConfigError("missing value for " + where(key, line_no));
    const std::string full = section.empty() ? key : section + "." + key;
    if (doc.entries_.count(full)) throw ConfigError("duplicate key " + where(full, line_no));
    doc.entries_[full] = Entry{value, line_no, false};
  }
  return doc;
}

const KvDocument::Entry& KvDocument::entry(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing key '" + key + "'");
  it->second.consumed = true;
  return it->second;
}

std::string KvDocument::get_string(const std::string& key) const {
  const Entry& e = entry(key);
  if (e.raw.size() < 2 || e.raw.front() != '"' || e.raw.back() != '"') {
    throw ConfigError(where(key, e.line) + " must be a quoted string");
  }
  return e.raw.substr(1, e.raw.size() - 2);
}

double KvDocument::get_double(const std::string& key) const {
  const Entry& e = entry(key);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(e.raw.data(), e.raw.data() + e.raw.size(), v);
  if (ec != std::errc() || ptr != e.raw.data() + e.raw.size()) throw ConfigError(where(key, e.line) + " must be a number");
  return v;
}

std::int64_t KvDocument::get_int(const std::string& key) const {
  const Entry& e = entry(key);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(e.raw.data(), e.raw.data() + e.raw.size(), v);
  if (ec != std::errc() || ptr != e.raw.data() + e.raw.size()) throw ConfigError(where(key, e.line) + " must be an integer");
  return v;
}

bool KvDocument::get_bool(const std::string& key) const {
  const Entry& e = entry(key);
  if (e.raw == "true") return true;
  if (e.raw == "false") return false;
  throw ConfigError(where(key, e.line) + " must be true or false");
}

std::vector<std::int64_t> KvDocument::get_int_list(const std::string& key) const {
  const Entry& e = entry(key);
  if (e.raw.size() < 2 || e.raw.front() != '[' || e.raw.back() != ']') {
    throw ConfigError(where(key, e.line) + " must be a [list] of integers");
  }
  std::vector<std::int64_t> out;
  std::istringstream items(e.raw.substr(1, e.raw.size() - 2));
  std::string item;
  while (std::getline(items, item, ',')) {
    item = trim(item);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError(where(key, e.line) + " must be a [list] of integers");
    }
    out.push_back(v);
  }
  return out;
}

void KvDocument::reject_unconsumed() const {
  for (const auto& [key, e] : entries_)
    if (!e.consumed) throw ConfigError("unknown key " + where(key, e.line));
}

}  // namespace vtreid::pipeline
