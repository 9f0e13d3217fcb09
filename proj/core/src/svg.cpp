#include "malgo/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "malgo/io.hpp"
#include "malgo/metrics.hpp"

namespace malgo {

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw std::runtime_error("csv: missing column " + name);
  }
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    if (!s.empty() && s.back() == ',') out.push_back("");
    return out;
  };
  if (!std::getline(in, line) || line.empty()) throw std::runtime_error(path + ": empty csv");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != t.header.size())
      throw std::runtime_error(path + ": ragged csv row");
    t.rows.push_back(std::move(fields));
  }
  if (t.rows.empty()) throw std::runtime_error(path + ": csv has no data rows");
  return t;
}

constexpr int kWidth = 720, kHeight = 480;
constexpr int kMarginL = 70, kMarginR = 20, kMarginT = 20, kMarginB = 50;

const char* palette(std::size_t i) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return kColors[i % 10];
}

struct Mapper {
  double x0, x1, y0, y1;  // data ranges
  double px(double x) const {
    double t = x1 == x0 ? 0.5 : (x - x0) / (x1 - x0);
    return kMarginL + t * (kWidth - kMarginL - kMarginR);
  }
  double py(double y) const {
    double t = y1 == y0 ? 0.5 : (y - y0) / (y1 - y0);
    return kHeight - kMarginB - t * (kHeight - kMarginT - kMarginB);
  }
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

void open_svg(std::ostringstream& svg) {
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void axes(std::ostringstream& svg, const Mapper& m, const std::string& xlabel,
          const std::string& ylabel) {
  svg << "<line x1=\"" << kMarginL << "\" y1=\"" << kHeight - kMarginB << "\" x2=\""
      << kWidth - kMarginR << "\" y2=\"" << kHeight - kMarginB
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT << "\" x2=\"" << kMarginL
      << "\" y2=\"" << kHeight - kMarginB << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg << "<text x=\"" << (kMarginL + kWidth - kMarginR) / 2 << "\" y=\"" << kHeight - 12
      << "\" font-size=\"14\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (kMarginT + kHeight - kMarginB) / 2
      << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (kMarginT + kHeight - kMarginB) / 2 << ")\">" << ylabel << "</text>\n";
  // y tick labels at range ends and midpoint
  for (double t : {0.0, 0.5, 1.0}) {
    double v = m.y0 + t * (m.y1 - m.y0);
    svg << "<text x=\"" << kMarginL - 6 << "\" y=\"" << fmt(m.py(v) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
    svg << "<line x1=\"" << kMarginL - 4 << "\" y1=\"" << fmt(m.py(v)) << "\" x2=\"" << kMarginL
        << "\" y2=\"" << fmt(m.py(v)) << "\" stroke=\"black\"/>\n";
  }
}

void plot_eta_trajectories(const CsvTable& t, std::ostringstream& svg) {
  int epoch_col = t.column("epoch");
  std::vector<int> eta_cols;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i].rfind("eta_", 0) == 0) eta_cols.push_back(static_cast<int>(i));
  if (eta_cols.empty()) throw std::runtime_error("etatraj: no eta_* columns");

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& row : t.rows) {
    double e = std::stod(row[static_cast<std::size_t>(epoch_col)]);
    xmin = std::min(xmin, e);
    xmax = std::max(xmax, e);
    for (int c : eta_cols) {
      double v = std::stod(row[static_cast<std::size_t>(c)]);
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  Mapper m{xmin, xmax, ymin, ymax};
  axes(svg, m, "epoch", "eta");
  for (std::size_t k = 0; k < eta_cols.size(); ++k) {
    svg << "<polyline fill=\"none\" stroke=\"" << palette(k)
        << "\" stroke-width=\"1\" points=\"";
    for (const auto& row : t.rows) {
      double e = std::stod(row[static_cast<std::size_t>(epoch_col)]);
      double v = std::stod(row[static_cast<std::size_t>(eta_cols[k])]);
      svg << fmt(m.px(e)) << "," << fmt(m.py(v)) << " ";
    }
    svg << "\"/>\n";
  }
}

void plot_benchmark(const CsvTable& t, std::ostringstream& svg) {
  int mcol = t.column("method"), rcol = t.column("run"), vcol = t.column("metric");
  (void)rcol;
  std::map<std::string, std::vector<double>> by_method;
  for (const auto& row : t.rows)
    by_method[row[static_cast<std::size_t>(mcol)]].push_back(
        std::stod(row[static_cast<std::size_t>(vcol)]));

  double ymin = 1e300, ymax = -1e300;
  for (const auto& [method, vals] : by_method)
    for (double v : vals) {
      if (!(v > 0)) throw std::runtime_error("benchmark plot: nonpositive metric");
      ymin = std::min(ymin, std::log10(v));
      ymax = std::max(ymax, std::log10(v));
    }
  if (ymax - ymin < 0.5) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  Mapper m{-0.5, static_cast<double>(by_method.size()) - 0.5, ymin, ymax};
  axes(svg, m, "method", "log10 metric");

  std::size_t idx = 0;
  for (const auto& [method, vals] : by_method) {
    double x = static_cast<double>(idx);
    // faded per-run points
    for (double v : vals)
      svg << "<circle cx=\"" << fmt(m.px(x)) << "\" cy=\"" << fmt(m.py(std::log10(v)))
          << "\" r=\"4\" fill=\"" << palette(idx) << "\" fill-opacity=\"0.35\"/>\n";
    LogAggregate agg = aggregate_log10(vals);
    svg << "<line x1=\"" << fmt(m.px(x)) << "\" y1=\"" << fmt(m.py(agg.log_mean - agg.log_std))
        << "\" x2=\"" << fmt(m.px(x)) << "\" y2=\"" << fmt(m.py(agg.log_mean + agg.log_std))
        << "\" stroke=\"" << palette(idx) << "\" stroke-width=\"2\"/>\n";
    svg << "<circle cx=\"" << fmt(m.px(x)) << "\" cy=\"" << fmt(m.py(agg.log_mean))
        << "\" r=\"6\" fill=\"" << palette(idx) << "\"/>\n";
    svg << "<text x=\"" << fmt(m.px(x)) << "\" y=\"" << kHeight - kMarginB + 18
        << "\" font-size=\"12\" text-anchor=\"middle\">" << method << "</text>\n";
    ++idx;
  }
}

void plot_ablation(const CsvTable& t, std::ostringstream& svg) {
  int fcol = t.column("fraction"), vcol = t.column("test_loss");
  std::map<double, std::vector<double>> by_fraction;
  for (const auto& row : t.rows)
    by_fraction[std::stod(row[static_cast<std::size_t>(fcol)])].push_back(
        std::stod(row[static_cast<std::size_t>(vcol)]));

  double ymin = 1e300, ymax = -1e300;
  for (const auto& [f, vals] : by_fraction)
    for (double v : vals) {
      if (!(v > 0)) throw std::runtime_error("ablation plot: nonpositive test loss");
      ymin = std::min(ymin, std::log10(v));
      ymax = std::max(ymax, std::log10(v));
    }
  if (ymax - ymin < 0.5) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  double xmin = by_fraction.begin()->first, xmax = by_fraction.rbegin()->first;
  Mapper m{xmin, xmax, ymin, ymax};
  axes(svg, m, "adaptation fraction", "log10 test loss");

  for (const auto& [f, vals] : by_fraction)
    for (double v : vals)
      svg << "<circle cx=\"" << fmt(m.px(f)) << "\" cy=\"" << fmt(m.py(std::log10(v)))
          << "\" r=\"4\" fill=\"#1f77b4\" fill-opacity=\"0.35\"/>\n";

  svg << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" points=\"";
  for (const auto& [f, vals] : by_fraction) {
    LogAggregate agg = aggregate_log10(vals);
    svg << fmt(m.px(f)) << "," << fmt(m.py(agg.log_mean)) << " ";
  }
  svg << "\"/>\n";
}

}  // namespace

void render_plot(const std::string& kind, const std::string& csv_path,
                 const std::string& svg_path) {
  CsvTable t = read_csv(csv_path);  // throws before the output file is touched
  std::ostringstream svg;
  open_svg(svg);
  if (kind == "etatraj")
    plot_eta_trajectories(t, svg);
  else if (kind == "benchmark")
    plot_benchmark(t, svg);
  else if (kind == "ablation")
    plot_ablation(t, svg);
  else
    throw std::invalid_argument("render_plot: unknown kind '" + kind + "'");
  svg << "</svg>\n";
  write_file(svg_path, svg.str());
}

}  // namespace malgo
