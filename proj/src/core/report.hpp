#ifndef WDDP_CORE_REPORT_HPP
#define WDDP_CORE_REPORT_HPP

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "harness.hpp"

namespace wddp {

// Streaming CSV writer for sweep rows; one flushed line per row so an
// interrupted run leaves a valid prefix. By default runtime_ms is written as
// 0 to keep the file byte-identical across reruns; measured timings always
// appear in the JSON report.
class CsvResultWriter {
 public:
  explicit CsvResultWriter(std::ostream& out, bool real_timing = false);

  void write_header();
  void write_row(const SweepResult& row);

  static std::string header_line();

 private:
  std::ostream& out_;
  bool real_timing_;
};

nlohmann::json result_to_json(const SweepResult& row);
SweepResult result_from_json(const nlohmann::json& value);

// Full sweep report: spec echo plus every row (with measured timings).
nlohmann::json sweep_report_json(const nlohmann::json& spec_echo,
                                 const std::vector<SweepResult>& results);

// Self-contained SVG line chart: x = sweep value, y = mean accuracy with
// standard-error bars, one polyline per method.
std::string render_sweep_svg(const std::vector<SweepResult>& results);

// Fixed-format floating point for byte-stable artifacts.
std::string format_double(double value);

}  // namespace wddp

#endif  // WDDP_CORE_REPORT_HPP
