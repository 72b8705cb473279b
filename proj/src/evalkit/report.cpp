#include "vtreid/evalkit/report.hpp"

#include <cmath>
#include <cstdio>

#include "vtreid/core/error.hpp"

namespace vtreid::eval {

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

EvalReport compose_report(std::vector<int> sizes, std::vector<MethodResult> rows, std::string config_hash) {
  if (sizes.empty()) throw ContractError("report needs at least one split size");
  for (const auto& row : rows) {
    if (row.splits.size() != sizes.size()) {
      throw ContractError("method '" + row.method + "' has " + std::to_string(row.splits.size()) +
                          " splits, report has " + std::to_string(sizes.size()));
    }
    if (row.method.find_first_of(",\n\"") != std::string::npos) {
      throw ContractError("method label '" + row.method + "' contains a CSV delimiter");
    }
    for (const auto& s : row.splits) {
      for (double v : {s.map, s.rank1, s.rank5}) {
        if (!(v >= 0.0 && v <= 1.0)) throw ContractError("metric outside [0,1] in '" + row.method + "'");
      }
      if (s.rank5 < s.rank1) throw ContractError("rank5 below rank1 in '" + row.method + "'");
    }
  }
  return EvalReport{std::move(sizes), std::move(rows), std::move(config_hash)};
}

std::string EvalReport::to_csv() const {
  std::string out = "method";
  for (int s : sizes) {
    const std::string tag = std::to_string(s);
    out += ",mAP@" + tag + ",Rank1@" + tag + ",Rank5@" + tag;
  }
  out += "\n";
  for (const auto& row : rows) {
    out += row.method;
    for (const auto& s : row.splits) out += "," + format_percent(s.map) + "," + format_percent(s.rank1) + "," + format_percent(s.rank5);
    out += "\n";
  }
  return out;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["sizes"] = sizes;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json r;
    r["method"] = row.method;
    r["splits"] = nlohmann::json::array();
    for (std::size_t i = 0; i < row.splits.size(); ++i) {
      const auto& s = row.splits[i];
      r["splits"].push_back({{"size", sizes[i]}, {"mAP", s.map}, {"rank1", s.rank1}, {"rank5", s.rank5}});
    }
    j["rows"].push_back(std::move(r));
  }
  return j;
}

std::string cmc_csv(const std::vector<std::string>& methods, const std::vector<std::vector<double>>& curves) {
  if (methods.empty() || methods.size() != curves.size()) throw ContractError("cmc_csv: methods and curves differ");
  const std::size_t n = curves[0].size();
  for (const auto& c : curves)
    if (c.size() != n || n == 0) throw ContractError("cmc_csv: curves must share a nonzero length");
  std::string out = "rank";
  for (const auto& m : methods) out += "," + m;
  out += "\n";
  char buf[64];
  for (std::size_t r = 0; r < n; ++r) {
    out += std::to_string(r + 1);
    for (const auto& c : curves) {
      std::snprintf(buf, sizeof buf, ",%.6f", c[r]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace vtreid::eval
