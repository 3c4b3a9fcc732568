#include "metacog/io/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace metacog::io {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_number(const std::string& raw, int line) {
  const std::string t = trim(raw);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw ParseError("config: '" + t + "' is not a number", line, 1);
  }
  if (pos != t.size()) throw ParseError("config: trailing characters in number '" + t + "'", line, 1);
  return v;
}

}  // namespace

double ConfigValue::as_double() const { return parse_number(raw, line); }

long ConfigValue::as_int() const {
  const double v = as_double();
  const long i = static_cast<long>(v);
  if (static_cast<double>(i) != v)
    throw ParseError("config: '" + raw + "' is not an integer", line, 1);
  return i;
}

bool ConfigValue::as_bool() const {
  const std::string t = trim(raw);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ParseError("config: '" + t + "' is not a boolean", line, 1);
}

Eigen::VectorXd ConfigValue::as_vector() const {
  std::vector<double> vals;
  std::string item;
  std::stringstream ss(raw);
  while (std::getline(ss, item, ',')) vals.push_back(parse_number(item, line));
  if (vals.empty()) throw ParseError("config: empty array value", line, 1);
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

ConfigDoc ConfigDoc::parse(const std::string& text) {
  ConfigDoc doc;
  std::istringstream is(text);
  std::string raw_line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, raw_line)) {
    ++lineno;
    const std::size_t hash = raw_line.find('#');
    std::string content = trim(hash == std::string::npos ? raw_line : raw_line.substr(0, hash));
    if (content.empty()) continue;
    if (content.front() == '[') {
      if (content.back() != ']')
        throw ParseError("config: unterminated section header", lineno, 1);
      section = trim(content.substr(1, content.size() - 2));
      if (section.empty()) throw ParseError("config: empty section name", lineno, 1);
      doc.sections_[section];  // a section may legitimately stay empty
      continue;
    }
    const std::size_t eq = content.find('=');
    if (eq == std::string::npos)
      throw ParseError("config: expected 'key = value'", lineno, 1);
    if (section.empty())
      throw ParseError("config: key before any [section] header", lineno, 1);
    const std::string key = trim(content.substr(0, eq));
    if (key.empty()) throw ParseError("config: empty key", lineno, 1);
    auto& sec = doc.sections_[section];
    if (sec.count(key))
      throw ParseError("config: duplicate key '" + section + "." + key + "'", lineno, 1);
    sec[key] = ConfigValue{trim(content.substr(eq + 1)), lineno};
  }
  return doc;
}

ConfigDoc ConfigDoc::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

bool ConfigDoc::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

const ConfigValue& ConfigDoc::require(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) throw ConfigError("config: missing section [" + section + "]");
  const auto k = s->second.find(key);
  if (k == s->second.end())
    throw ConfigError("config: missing key '" + section + "." + key + "'");
  return k->second;
}

double ConfigDoc::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
  return has(section, key) ? require(section, key).as_double() : fallback;
}

long ConfigDoc::get_int(const std::string& section, const std::string& key, long fallback) const {
  return has(section, key) ? require(section, key).as_int() : fallback;
}

bool ConfigDoc::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  return has(section, key) ? require(section, key).as_bool() : fallback;
}

std::string ConfigDoc::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  return has(section, key) ? require(section, key).as_string() : fallback;
}

void ConfigDoc::check_known(const std::map<std::string, std::set<std::string>>& schema) const {
  for (const auto& [section, keys] : sections_) {
    const auto s = schema.find(section);
    if (s == schema.end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : keys)
      if (!s->second.count(key))
        throw ConfigError("config: unknown key '" + section + "." + key + "' (line " +
                          std::to_string(value.line) + ")");
  }
}

std::string ConfigDoc::echo() const {
  std::ostringstream os;
  for (const auto& [section, keys] : sections_) {
    os << '[' << section << "]\n";
    for (const auto& [key, value] : keys) os << key << " = " << value.raw << '\n';
    os << '\n';
  }
  return os.str();
}

}  // namespace metacog::io
