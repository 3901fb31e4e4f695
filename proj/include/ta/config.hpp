#pragma once

#include <map>
#include <string>
#include <vector>

namespace ta {

// Line-based `key = value` configuration. '#' starts a comment; blank lines
// are ignored; keys may contain dots.
class KvConfig {
 public:
  static KvConfig parse_file(const std::string& path);
  static KvConfig parse_string(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return kv_; }

  // Deterministic serialization (sorted keys).
  std::string to_string() const;

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace ta
