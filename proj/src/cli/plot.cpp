#include "pacer/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pacer/errors.hpp"

namespace pacer::cli {

namespace {
constexpr const char* kSchema =
    "step,wall_ms,critic_loss,actor_loss,d_m,v_psi,alpha,beta,"
    "eval_return_mean,eval_return_std";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string basename_no_ext(const std::string& path) {
  const auto slash = path.find_last_of("/\\");
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return name;
}
}  // namespace

Series read_eval_series(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open metrics csv: " + csv_path);
  std::string header;
  if (!std::getline(in, header))
    throw DataError("empty metrics csv: " + csv_path);
  if (header != kSchema)
    throw DataError("metrics csv has unexpected schema: " + csv_path);
  Series s;
  s.label = basename_no_ext(csv_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 10)
      throw DataError("malformed metrics row in " + csv_path);
    if (f[8].empty()) continue;  // gradient row
    s.steps.push_back(std::stod(f[0]));
    s.values.push_back(std::stod(f[8]));
  }
  if (s.steps.empty())
    throw DataError("metrics csv has no evaluation rows: " + csv_path);
  return s;
}

Series smooth_series(const Series& s, int window) {
  Series out;
  out.label = s.label;
  const int n = static_cast<int>(s.values.size());
  if (window < 1) window = 1;
  if (n == 0) return out;
  if (window >= n) {
    double acc = 0.0;
    for (double v : s.values) acc += v;
    out.steps.push_back(s.steps.back());
    out.values.push_back(acc / n);
    return out;
  }
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += s.values[i];
    if (i >= window) acc -= s.values[i - window];
    const int count = std::min(i + 1, window);
    out.steps.push_back(s.steps[i]);
    out.values.push_back(acc / count);
  }
  return out;
}

void write_svg_chart(const std::string& path, const std::vector<Series>& series,
                     const std::string& x_label, const std::string& y_label) {
  if (series.empty()) throw DataError("nothing to plot");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Series& s : series)
    for (size_t i = 0; i < s.steps.size(); ++i) {
      xmin = std::min(xmin, s.steps[i]);
      xmax = std::max(xmax, s.steps[i]);
      ymin = std::min(ymin, s.values[i]);
      ymax = std::max(ymax, s.values[i]);
    }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;

  const int w = 860, h = 520;
  const int ml = 80, mr = 180, mt = 30, mb = 60;
  const double pw = w - ml - mr, ph = h - mt - mb;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return mt + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  svg << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#333\"/>\n";

  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  svg << "<text x=\"" << ml << "\" y=\"" << h - mb + 20
      << "\" font-size=\"12\">" << num(xmin) << "</text>\n";
  svg << "<text x=\"" << ml + pw - 40 << "\" y=\"" << h - mb + 20
      << "\" font-size=\"12\">" << num(xmax) << "</text>\n";
  svg << "<text x=\"8\" y=\"" << mt + ph << "\" font-size=\"12\">" << num(ymin)
      << "</text>\n";
  svg << "<text x=\"8\" y=\"" << mt + 12 << "\" font-size=\"12\">" << num(ymax)
      << "</text>\n";
  svg << "<text x=\"" << ml + pw / 2 - 20 << "\" y=\"" << h - 16
      << "\" font-size=\"13\">" << x_label << "</text>\n";
  svg << "<text x=\"14\" y=\"" << mt + ph / 2
      << "\" font-size=\"13\" transform=\"rotate(-90 14," << mt + ph / 2
      << ")\">" << y_label << "</text>\n";

  int idx = 0;
  for (const Series& s : series) {
    const char* color = kColors[idx % 8];
    if (s.steps.size() == 1) {
      svg << "<circle cx=\"" << px(s.steps[0]) << "\" cy=\"" << py(s.values[0])
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    } else {
      svg << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (size_t i = 0; i < s.steps.size(); ++i)
        svg << px(s.steps[i]) << ',' << py(s.values[i]) << ' ';
      svg << "\"/>\n";
    }
    const int ly = mt + 16 + 18 * idx;
    svg << "<line x1=\"" << w - mr + 12 << "\" y1=\"" << ly - 4 << "\" x2=\""
        << w - mr + 34 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << w - mr + 40 << "\" y=\"" << ly
        << "\" font-size=\"12\">" << s.label << "</text>\n";
    ++idx;
  }
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write svg: " + path);
  out << svg.str();
}

}  // namespace pacer::cli
