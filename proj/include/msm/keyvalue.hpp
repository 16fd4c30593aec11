#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace msm {

class KeyValueError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` text format used by scenario and covariate-spec files.
// `#` starts a comment; blank lines are ignored; duplicate keys are an error.
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return values_; }
  const std::string& origin() const { return origin_; }

  // Canonical rendering: sorted keys, one `key = value` per line.
  std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

double parse_double(const std::string& text, const std::string& what);
std::vector<std::string> split(const std::string& text, char sep);
std::string trim(const std::string& text);

}  // namespace msm
