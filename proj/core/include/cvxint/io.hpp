#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvxint/matcore.hpp"

namespace cvxint {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal representation (locale independent, '.' separator).
std::string format_double(double v);

Json to_json(const Mat& m);
Json to_json(const Vec& v);
Mat mat_from_json(const Json& j);

}  // namespace cvxint
