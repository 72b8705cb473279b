#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace vtreid::pipeline {

struct Series {
  std::string name;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title, x_label, y_label;
  bool fixed_unit_y = false;  // y axis pinned to [0, 1]
};

// Deterministic SVG line chart; one polyline per series, legend included.
std::string line_plot_svg(const PlotSpec& spec, const std::vector<Series>& series);

// Parses "rank,<method>..." into one series per method; ContractError on an
// empty or ragged table.
std::vector<Series> read_cmc_csv(const std::string& text);
// The `column` of a training log against its step column.
Series read_log_column(const std::string& text, const std::string& column);

// Writes cmc@<size>.svg for every cmc@<size>.csv in `report_dir` and
// loss_<name>.svg for every (name, log) pair. Returns the files written,
// sorted.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& report_dir,
                                              const std::vector<std::pair<std::string, std::filesystem::path>>& logs,
                                              const std::filesystem::path& out_dir);

}  // namespace vtreid::pipeline
