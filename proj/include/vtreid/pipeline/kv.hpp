#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace vtreid::pipeline {

// Flat key-value text: `key = value` lines under optional `[section]`
// headers, `#` comments. Values are numbers, true/false, "strings" or
// [arrays] of numbers. Keys are stored fully dotted ("reid.model.fc1_width").
class KvDocument {
 public:
  static KvDocument parse(const std::string& text);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  // Typed reads; each marks the key as consumed. ConfigError names the key
  // on a malformed value.
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& key) const;

  // Throws ConfigError listing the first key never read.
  void reject_unconsumed() const;

 private:
  struct Entry {
    std::string raw;
    std::size_t line = 0;
    mutable bool consumed = false;
  };
  const Entry& entry(const std::string& key) const;

  std::map<std::string, Entry> entries_;
};

}  // namespace vtreid::pipeline
