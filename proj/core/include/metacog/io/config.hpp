#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "metacog/errors.hpp"

namespace metacog::io {

/// One value from the sectioned key-value run configuration. Values are
/// kept as text and converted on access.
struct ConfigValue {
  std::string raw;
  int line = 0;

  double as_double() const;
  long as_int() const;
  bool as_bool() const;
  const std::string& as_string() const { return raw; }
  Eigen::VectorXd as_vector() const;  // comma-separated numbers
};

/// Flat sectioned configuration document:
///   [section]
///   key = value        # comment
/// Duplicate keys within a section are rejected.
class ConfigDoc {
 public:
  static ConfigDoc parse(const std::string& text);
  static ConfigDoc parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  const ConfigValue& require(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;

  /// Reject sections or keys outside the given schema (section -> keys).
  void check_known(const std::map<std::string, std::set<std::string>>& schema) const;

  const std::map<std::string, std::map<std::string, ConfigValue>>& sections() const {
    return sections_;
  }

  /// Canonical text form for config echoing.
  std::string echo() const;

 private:
  std::map<std::string, std::map<std::string, ConfigValue>> sections_;
};

}  // namespace metacog::io
