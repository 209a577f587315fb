#include "config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace cvxint::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string where(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

}  // namespace

double parse_double(const std::string& s, const std::string& where) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(where + ": expected a number, got '" + t + "'");
  }
  return v;
}

Vec parse_vec(const std::string& s, const std::string& where) {
  Vec out;
  if (trim(s).empty()) return out;
  for (const auto& part : split(s, ',')) out.push_back(parse_double(part, where));
  return out;
}

Config Config::parse(const std::string& text) {
  Config cfg;
  cfg.text_ = text;
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  for (const auto& [name, node] : tree) {
    if (node.empty()) throw ConfigError("key '" + name + "' must live inside a [section]");
    std::vector<std::pair<std::string, std::string>> keys;
    for (const auto& [key, leaf] : node) keys.emplace_back(key, trim(leaf.data()));
    cfg.sections_.emplace_back(name, std::move(keys));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::validate(const Schema& schema) const {
  for (const auto& [section, keys] : sections_) {
    const auto it = schema.find(section);
    if (it == schema.end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& kv : keys) {
      if (!it->second.count(kv.first)) throw ConfigError("unknown key " + where(section, kv.first));
    }
  }
}

std::optional<std::string> Config::raw(const std::string& section, const std::string& key) const {
  for (const auto& [name, keys] : sections_) {
    if (name != section) continue;
    for (const auto& [k, v] : keys) {
      if (k == key) return v;
    }
  }
  return std::nullopt;
}

bool Config::has(const std::string& section, const std::string& key) const { return raw(section, key).has_value(); }

std::string Config::get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
  return raw(section, key).value_or(fallback);
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
  const auto r = raw(section, key);
  return r ? parse_double(*r, where(section, key)) : fallback;
}

double Config::require_double(const std::string& section, const std::string& key) const {
  const auto r = raw(section, key);
  if (!r) throw ConfigError("missing key " + where(section, key));
  return parse_double(*r, where(section, key));
}

long Config::get_int(const std::string& section, const std::string& key, long fallback) const {
  const auto r = raw(section, key);
  if (!r) return fallback;
  const std::string t = trim(*r);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(where(section, key) + ": expected an integer, got '" + t + "'");
  }
  return v;
}

std::size_t Config::get_size(const std::string& section, const std::string& key, std::size_t fallback) const {
  const long v = get_int(section, key, static_cast<long>(fallback));
  if (v < 0) throw ConfigError(where(section, key) + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

Vec Config::get_vec(const std::string& section, const std::string& key, const Vec& fallback) const {
  const auto r = raw(section, key);
  return r ? parse_vec(*r, where(section, key)) : fallback;
}

Vec Config::require_vec(const std::string& section, const std::string& key) const {
  const auto r = raw(section, key);
  if (!r) throw ConfigError("missing key " + where(section, key));
  return parse_vec(*r, where(section, key));
}

namespace {

Mat to_mat(const Vec& v, std::size_t rows, std::size_t cols, const std::string& w) {
  if (v.size() != rows * cols) {
    throw ConfigError(w + ": expected " + std::to_string(rows * cols) + " entries, got " + std::to_string(v.size()));
  }
  return Mat(rows, cols, v);
}

}  // namespace

Mat Config::get_mat(const std::string& section, const std::string& key, std::size_t rows, std::size_t cols,
                    const Mat& fallback) const {
  if (!has(section, key)) return fallback;
  return to_mat(get_vec(section, key, {}), rows, cols, where(section, key));
}

Mat Config::require_mat(const std::string& section, const std::string& key, std::size_t rows,
                        std::size_t cols) const {
  return to_mat(require_vec(section, key), rows, cols, where(section, key));
}

std::vector<Mat> Config::get_mats(const std::string& section, const std::string& key, std::size_t rows,
                                  std::size_t cols) const {
  std::vector<Mat> out;
  const auto r = raw(section, key);
  if (!r || trim(*r).empty()) return out;
  for (const auto& part : split(*r, ';')) {
    if (part.empty()) continue;
    out.push_back(to_mat(parse_vec(part, where(section, key)), rows, cols, where(section, key)));
  }
  return out;
}

Json Config::to_json() const {
  Json j = Json::object();
  for (const auto& [name, keys] : sections_) {
    Json s = Json::object();
    for (const auto& [k, v] : keys) s[k] = v;
    j[name] = std::move(s);
  }
  return j;
}

}  // namespace cvxint::cli
