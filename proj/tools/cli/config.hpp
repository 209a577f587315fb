#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvxint/io.hpp"
#include "cvxint/matcore.hpp"

namespace cvxint::cli {

/// Malformed, missing, or unknown configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Allowed keys per section.
using Schema = std::map<std::string, std::set<std::string>>;

/// Sectioned key = value text. Matrices are comma-separated row-major lists; lists of matrices use ';'.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  /// Throws ConfigError on any section or key outside the schema.
  void validate(const Schema& schema) const;

  const std::string& text() const noexcept { return text_; }
  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> raw(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  double require_double(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  std::size_t get_size(const std::string& section, const std::string& key, std::size_t fallback) const;
  Vec get_vec(const std::string& section, const std::string& key, const Vec& fallback) const;
  Vec require_vec(const std::string& section, const std::string& key) const;
  Mat get_mat(const std::string& section, const std::string& key, std::size_t rows, std::size_t cols,
              const Mat& fallback) const;
  Mat require_mat(const std::string& section, const std::string& key, std::size_t rows, std::size_t cols) const;
  std::vector<Mat> get_mats(const std::string& section, const std::string& key, std::size_t rows,
                            std::size_t cols) const;

  /// Parsed values, sections and keys in file order.
  Json to_json() const;

 private:
  std::string text_;
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections_;
};

double parse_double(const std::string& s, const std::string& where);
Vec parse_vec(const std::string& s, const std::string& where);

}  // namespace cvxint::cli
