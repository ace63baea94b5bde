#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "errors.hpp"

namespace wddp {

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

CsvResultWriter::CsvResultWriter(std::ostream& out, bool real_timing)
    : out_(out), real_timing_(real_timing) {}

std::string CsvResultWriter::header_line() {
  return "method,protocol,sweep_var,sweep_value,seed,eta,sigma,accuracy,optimal_gap,"
         "runtime_ms,status";
}

void CsvResultWriter::write_header() {
  out_ << header_line() << "\n";
  out_.flush();
}

void CsvResultWriter::write_row(const SweepResult& row) {
  out_ << row.method << ',' << row.protocol << ',' << row.sweep_var << ','
       << format_double(row.sweep_value) << ',' << row.seed << ',';
  if (row.ok()) {
    out_ << format_double(row.eta) << ',' << format_double(row.sigma) << ','
         << format_double(row.accuracy) << ',' << format_double(row.optimal_gap) << ',';
  } else {
    out_ << ",,,,";
  }
  out_ << (real_timing_ ? row.runtime_ms : 0) << ',' << row.status << "\n";
  out_.flush();
}

nlohmann::json result_to_json(const SweepResult& row) {
  return nlohmann::json{{"method", row.method},
                        {"protocol", row.protocol},
                        {"sweep_var", row.sweep_var},
                        {"sweep_value", row.sweep_value},
                        {"seed", row.seed},
                        {"eta", row.eta},
                        {"sigma", row.sigma},
                        {"accuracy", row.accuracy},
                        {"optimal_gap", row.optimal_gap},
                        {"runtime_ms", row.runtime_ms},
                        {"status", row.status}};
}

SweepResult result_from_json(const nlohmann::json& value) {
  SweepResult row;
  row.method = value.at("method").get<std::string>();
  row.protocol = value.at("protocol").get<std::string>();
  row.sweep_var = value.at("sweep_var").get<std::string>();
  row.sweep_value = value.at("sweep_value").get<double>();
  row.seed = value.at("seed").get<std::uint64_t>();
  row.eta = value.at("eta").get<double>();
  row.sigma = value.at("sigma").get<double>();
  row.accuracy = value.at("accuracy").get<double>();
  row.optimal_gap = value.at("optimal_gap").get<double>();
  row.runtime_ms = value.at("runtime_ms").get<std::int64_t>();
  row.status = value.at("status").get<std::string>();
  return row;
}

nlohmann::json sweep_report_json(const nlohmann::json& spec_echo,
                                 const std::vector<SweepResult>& results) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : results) rows.push_back(result_to_json(row));
  return nlohmann::json{{"spec", spec_echo}, {"results", rows}};
}

namespace {

struct SeriesPoint {
  double x = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

std::map<std::string, std::vector<SeriesPoint>> series_by_method(
    const std::vector<SweepResult>& results) {
  std::map<std::string, std::map<double, std::vector<double>>> grouped;
  for (const auto& row : results) {
    if (!row.ok()) continue;
    grouped[row.method][row.sweep_value].push_back(row.accuracy);
  }
  std::map<std::string, std::vector<SeriesPoint>> series;
  for (const auto& [method, by_value] : grouped) {
    for (const auto& [value, samples] : by_value) {
      SeriesPoint point;
      point.x = value;
      const double n = static_cast<double>(samples.size());
      for (const double a : samples) point.mean += a;
      point.mean /= n;
      if (samples.size() > 1) {
        double ss = 0.0;
        for (const double a : samples) ss += (a - point.mean) * (a - point.mean);
        point.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
      }
      series[method].push_back(point);
    }
  }
  return series;
}

}  // namespace

std::string render_sweep_svg(const std::vector<SweepResult>& results) {
  if (results.empty()) throw ValidationError("svg report: no results");
  const auto series = series_by_method(results);

  const double width = 640.0, height = 420.0;
  const double left = 70.0, right = 600.0, top = 40.0, bottom = 360.0;

  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  for (const auto& [method, points] : series) {
    for (const auto& p : points) {
      x_min = std::min(x_min, p.x);
      x_max = std::max(x_max, p.x);
      y_min = std::min(y_min, p.mean - p.stderr_);
      y_max = std::max(y_max, p.mean + p.stderr_);
    }
  }
  if (x_min > x_max) throw ValidationError("svg report: no successful rows");
  if (x_max == x_min) x_max = x_min + 1.0;
  const double pad = std::max(0.02, 0.1 * (y_max - y_min));
  y_min -= pad;
  y_max += pad;

  const auto sx = [&](double x) { return left + (x - x_min) / (x_max - x_min) * (right - left); };
  const auto sy = [&](double y) { return bottom - (y - y_min) / (y_max - y_min) * (bottom - top); };

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
      << bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
      << "\" stroke=\"black\"/>\n";
  const std::string x_label = results.front().sweep_var;
  svg << "<text x=\"" << (left + right) / 2 << "\" y=\"" << bottom + 35
      << "\" text-anchor=\"middle\" font-size=\"14\">" << x_label << "</text>\n";
  svg << "<text x=\"18\" y=\"" << (top + bottom) / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
      << (top + bottom) / 2 << ")\">accuracy</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double xv = x_min + (x_max - x_min) * tick / 4.0;
    const double yv = y_min + (y_max - y_min) * tick / 4.0;
    svg << "<text x=\"" << sx(xv) << "\" y=\"" << bottom + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << format_double(xv) << "</text>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << sy(yv) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(yv) << "</text>\n";
  }

  std::size_t color = 0;
  double legend_y = top + 4.0;
  for (const auto& [method, points] : series) {
    const char* stroke = kPalette[color % 6];
    svg << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : points) svg << sx(p.x) << "," << sy(p.mean) << " ";
    svg << "\"/>\n";
    for (const auto& p : points) {
      if (p.stderr_ > 0.0) {
        svg << "<line x1=\"" << sx(p.x) << "\" y1=\"" << sy(p.mean - p.stderr_) << "\" x2=\""
            << sx(p.x) << "\" y2=\"" << sy(p.mean + p.stderr_) << "\" stroke=\"" << stroke
            << "\" stroke-width=\"1\"/>\n";
      }
      svg << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.mean) << "\" r=\"2.5\" fill=\""
          << stroke << "\"/>\n";
    }
    svg << "<rect x=\"" << right - 150 << "\" y=\"" << legend_y - 9 << "\" width=\"12\" height=\"4\" fill=\""
        << stroke << "\"/>\n";
    svg << "<text x=\"" << right - 132 << "\" y=\"" << legend_y
        << "\" font-size=\"12\">" << method << "</text>\n";
    legend_y += 16.0;
    ++color;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace wddp
