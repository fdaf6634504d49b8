#pragma once

#include <string>
#include <vector>

namespace pacer::cli {

struct Series {
  std::string label;
  std::vector<double> steps;
  std::vector<double> values;
};

// eval rows (step, eval_return_mean) of a metrics csv
Series read_eval_series(const std::string& csv_path);

// trailing moving average; a window longer than the series collapses it to
// one averaged point
Series smooth_series(const Series& s, int window);

// self-contained SVG line chart with a legend entry per series
void write_svg_chart(const std::string& path, const std::vector<Series>& series,
                     const std::string& x_label, const std::string& y_label);

}  // namespace pacer::cli
