#include "cvxint/io.hpp"

#include <charconv>
#include <cmath>

#include "cvxint/error.hpp"

namespace cvxint {

std::string format_double(double v) {
  if (v == 0.0) return "0";  // folds -0 so reruns and comparisons see one spelling
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Mat mat_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) fail(ErrorKind::InvalidArgument, "matrix JSON must be a non-empty array");
  const std::size_t m = j.size();
  const std::size_t n = j.at(0).size();
  Mat out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    if (j[i].size() != n) fail(ErrorKind::ShapeMismatch, "ragged matrix JSON");
    for (std::size_t k = 0; k < n; ++k) out(i, k) = j[i][k].get<double>();
  }
  return out;
}

}  // namespace cvxint
