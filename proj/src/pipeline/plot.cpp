#include "vtreid/pipeline/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vtreid/core/error.hpp"

namespace vtreid::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 180, kTop = 40, kBottom = 55;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ContractError("not a number in table: '" + s + "'");
  return v;
}

std::vector<std::vector<std::string>> read_table(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split(line, ','));
  }
  if (rows.size() < 2) throw ContractError("table has no data rows");
  for (const auto& r : rows)
    if (r.size() != rows[0].size()) throw ContractError("ragged table row");
  return rows;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + p.string());
}

}  // namespace

std::string line_plot_svg(const PlotSpec& spec, const std::vector<Series>& series) {
  if (series.empty()) throw ContractError("plot needs at least one series");
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size()) throw ContractError("series '" + s.name + "' is empty or ragged");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) throw ContractError("series '" + s.name + "' is not finite");
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (spec.fixed_unit_y) {
    y0 = 0.0;
    y1 = 1.0;
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(spec.title) << "</text>\n";
  svg << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    svg << "<line x1=\"" << fmt(px(xv)) << "\" y1=\"" << fmt(kTop + ph) << "\" x2=\"" << fmt(px(xv)) << "\" y2=\""
        << fmt(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << fmt(kTop + ph + 18) << "\" text-anchor=\"middle\">" << tick(xv)
        << "</text>\n";
    svg << "<line x1=\"" << fmt(kLeft - 5) << "\" y1=\"" << fmt(py(yv)) << "\" x2=\"" << fmt(kLeft + pw) << "\" y2=\""
        << fmt(py(yv)) << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(py(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
        << "</text>\n";
  }
  svg << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\"" << fmt(kHeight - 12) << "\" text-anchor=\"middle\">"
      << escape(spec.x_label) << "</text>\n";
  svg << "<text transform=\"translate(18," << fmt(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(spec.y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % std::size(kPalette)];
    svg << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      svg << (i ? " " : "") << fmt(px(series[k].x[i])) << ',' << fmt(py(series[k].y[i]));
    }
    svg << "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    svg << "<line x1=\"" << fmt(kLeft + pw + 12) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(kLeft + pw + 32)
        << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fmt(kLeft + pw + 36) << "\" y=\"" << fmt(ly + 4) << "\">" << escape(series[k].name)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<Series> read_cmc_csv(const std::string& text) {
  const auto rows = read_table(text);
  if (rows[0].size() < 2 || rows[0][0] != "rank") throw ContractError("CMC table must start with a rank column");
  std::vector<Series> out;
  for (std::size_t c = 1; c < rows[0].size(); ++c) {
    Series s{rows[0][c], {}, {}};
    for (std::size_t r = 1; r < rows.size(); ++r) {
      s.x.push_back(parse_double(rows[r][0]));
      s.y.push_back(parse_double(rows[r][c]));
    }
    out.push_back(std::move(s));
  }
  return out;
}

Series read_log_column(const std::string& text, const std::string& column) {
  const auto rows = read_table(text);
  const auto it = std::find(rows[0].begin(), rows[0].end(), column);
  if (rows[0][0] != "step" || it == rows[0].end()) throw ContractError("log has no '" + column + "' column");
  const auto c = static_cast<std::size_t>(it - rows[0].begin());
  Series s{column, {}, {}};
  for (std::size_t r = 1; r < rows.size(); ++r) {
    s.x.push_back(parse_double(rows[r][0]));
    s.y.push_back(parse_double(rows[r][c]));
  }
  return s;
}

std::vector<fs::path> emit_plots(const fs::path& report_dir, const std::vector<std::pair<std::string, fs::path>>& logs,
                                 const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  std::vector<fs::path> tables;
  if (fs::exists(report_dir)) {
    for (const auto& e : fs::directory_iterator(report_dir)) {
      const std::string name = e.path().filename().string();
      if (name.rfind("cmc@", 0) == 0 && e.path().extension() == ".csv") tables.push_back(e.path());
    }
  }
  std::sort(tables.begin(), tables.end());
  for (const auto& t : tables) {
    const std::string size = t.stem().string().substr(4);
    const fs::path out = out_dir / (t.stem().string() + ".svg");
    write_text(out, line_plot_svg({"CMC, test size " + size, "rank", "match rate", true}, read_cmc_csv(read_text(t))));
    written.push_back(out);
  }
  for (const auto& [name, log] : logs) {
    const fs::path out = out_dir / ("loss_" + name + ".svg");
    write_text(out, line_plot_svg({"Training loss: " + name, "step", "l_total", false},
                                  {read_log_column(read_text(log), "l_total")}));
    written.push_back(out);
  }
  std::sort(written.begin(), written.end());
  return written;
}

}  // namespace vtreid::pipeline
