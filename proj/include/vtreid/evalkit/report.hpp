#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace vtreid::eval {

// Fractions in [0, 1]; formatted as percentages.
struct SplitMetrics {
  double map = 0.0;
  double rank1 = 0.0;
  double rank5 = 0.0;
};

struct MethodResult {
  std::string method;
  std::vector<SplitMetrics> splits;  // one per report size, same order
};

struct EvalReport {
  std::vector<int> sizes;
  std::vector<MethodResult> rows;
  std::string config_hash;

  // Report layout: method, then mAP/Rank1/Rank5 per size, 2 decimals.
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Validates ranges (0 <= value <= 1, rank5 >= rank1) and shape.
EvalReport compose_report(std::vector<int> sizes, std::vector<MethodResult> rows, std::string config_hash = {});

// Percent with two decimals, e.g. 0.5401 -> "54.01".
std::string format_percent(double fraction);

// "rank,<method>..." with one row per rank; curves must share a length.
std::string cmc_csv(const std::vector<std::string>& methods, const std::vector<std::vector<double>>& curves);

}  // namespace vtreid::eval
