#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "holdpp/data.hpp"
#include "holdpp/harness.hpp"

namespace holdpp {

namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kMarginLeft = 60, kMarginRight = 20, kMarginTop = 30,
                 kMarginBottom = 50;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Plain SVG canvas with a framed plot area and linear data mapping.
class Svg {
 public:
  Svg(double x_min, double x_max, double y_min, double y_max,
      const std::string& title) {
    x_min_ = x_min;
    x_span_ = x_max - x_min;
    y_min_ = y_min;
    y_span_ = y_max - y_min;
    body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
          << "\" height=\"" << kHeight << "\">\n";
    body_ << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop
          << "\" width=\"" << kWidth - kMarginLeft - kMarginRight
          << "\" height=\"" << kHeight - kMarginTop - kMarginBottom
          << "\" fill=\"none\" stroke=\"black\"/>\n";
    body_ << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\""
          << " font-size=\"14\">" << title << "</text>\n";
  }

  double px(double x) const {
    return kMarginLeft +
           (x - x_min_) / x_span_ * (kWidth - kMarginLeft - kMarginRight);
  }
  double py(double y) const {
    return kHeight - kMarginBottom -
           (y - y_min_) / y_span_ * (kHeight - kMarginTop - kMarginBottom);
  }

  void line(double x0, double y0, double x1, double y1,
            const std::string& color, double width = 1.5) {
    body_ << "<line x1=\"" << fmt(px(x0)) << "\" y1=\"" << fmt(py(y0))
          << "\" x2=\"" << fmt(px(x1)) << "\" y2=\"" << fmt(py(y1))
          << "\" stroke=\"" << color << "\" stroke-width=\"" << width
          << "\"/>\n";
  }

  void rect(double x0, double y0, double x1, double y1,
            const std::string& color) {
    body_ << "<rect x=\"" << fmt(px(x0)) << "\" y=\"" << fmt(py(y1))
          << "\" width=\"" << fmt(px(x1) - px(x0)) << "\" height=\""
          << fmt(py(y0) - py(y1)) << "\" fill=\"" << color
          << "\" stroke=\"black\"/>\n";
  }

  void circle(double x, double y, double r, const std::string& color) {
    body_ << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y))
          << "\" r=\"" << r << "\" fill=\"" << color << "\"/>\n";
  }

  void label(double x, double y, const std::string& text,
             const std::string& anchor = "middle") {
    body_ << "<text x=\"" << fmt(px(x)) << "\" y=\"" << fmt(py(y) + 15)
          << "\" text-anchor=\"" << anchor << "\" font-size=\"11\">" << text
          << "</text>\n";
  }

  void save(const std::string& path) {
    body_ << "</svg>\n";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("emit_plots: cannot open " + path);
    out << body_.str();
  }

 private:
  std::ostringstream body_;
  double x_min_, x_span_, y_min_, y_span_;
};

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                          "#d62728", "#9467bd", "#8c564b"};

void emit_auroc_vs_n(const std::vector<RunRecord>& records,
                     const fs::path& dir) {
  const auto rows = aggregate_ci(records, {"n", "beta", "eps_num"});
  std::ofstream csv(dir / "auroc_vs_n.csv", std::ios::trunc);
  csv << "group,count,mean_auroc,ci_halfwidth\n";
  csv.precision(17);
  for (const auto& row : rows)
    csv << "\"" << row.group << "\"," << row.count << "," << row.mean << ","
        << (row.has_ci ? row.ci_halfwidth : 0.0) << "\n";

  Svg svg(0, static_cast<double>(rows.size()), 0.0, 1.0,
          "Attack AUROC by (n, beta, eps_num)");
  svg.line(0, 0.5, static_cast<double>(rows.size()), 0.5, "#999999", 1.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double x0 = i + 0.2, x1 = i + 0.8, xc = i + 0.5;
    svg.rect(x0, 0.0, x1, rows[i].mean, "#7fb3d5");
    if (rows[i].has_ci) {
      svg.line(xc, rows[i].mean - rows[i].ci_halfwidth,
               xc, rows[i].mean + rows[i].ci_halfwidth, "black");
    }
    svg.label(xc, -0.02, rows[i].group);
  }
  svg.save((dir / "auroc_vs_n.svg").string());
}

void emit_auroc_vs_time(const std::vector<RunRecord>& records,
                        const fs::path& dir) {
  // Per model order: mean and CI of the per-timestep AUROC across runs.
  std::map<int, std::vector<const RunRecord*>> by_order;
  for (const auto& r : records)
    if (!r.error && !r.per_time_auroc.empty()) by_order[r.order].push_back(&r);
  if (by_order.empty()) return;

  std::ofstream csv(dir / "auroc_vs_time.csv", std::ios::trunc);
  csv << "n,k,t_fraction,mean_auroc,ci_halfwidth,count\n";
  csv.precision(17);

  Svg svg(0.0, 1.0, 0.0, 1.0, "Per-timestep attack AUROC vs diffusion time");
  svg.line(0, 0.5, 1.0, 0.5, "#999999", 1.0);
  int color_idx = 0;
  for (const auto& [order, runs] : by_order) {
    const std::size_t n_time = runs.front()->per_time_auroc.size();
    const std::string color =
        kPalette[color_idx++ % (sizeof(kPalette) / sizeof(kPalette[0]))];
    double prev_t = 0, prev_m = 0;
    for (std::size_t k = 0; k < n_time; ++k) {
      double mean = 0.0;
      for (const auto* r : runs) mean += r->per_time_auroc[k];
      mean /= runs.size();
      double ci = 0.0;
      if (runs.size() >= 2) {
        double ss = 0.0;
        for (const auto* r : runs)
          ss += (r->per_time_auroc[k] - mean) * (r->per_time_auroc[k] - mean);
        ci = 1.96 * std::sqrt(ss / (runs.size() - 1)) /
             std::sqrt(double(runs.size()));
      }
      const double t_frac = static_cast<double>(k) / n_time;
      csv << order << "," << (k + 1) << "," << t_frac << "," << mean << ","
          << ci << "," << runs.size() << "\n";
      if (k > 0) svg.line(prev_t, prev_m, t_frac, mean, color);
      svg.circle(t_frac, mean, 2.5, color);
      svg.line(t_frac, mean - ci, t_frac, mean + ci, color, 1.0);
      prev_t = t_frac;
      prev_m = mean;
    }
    svg.label(prev_t, prev_m, "n=" + std::to_string(order), "end");
  }
  svg.save((dir / "auroc_vs_time.svg").string());
}

void emit_sample_scatter(const std::vector<RunRecord>& records,
                         const fs::path& dir) {
  // First repeat per grid point only.
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (r.error || r.samples_csv.empty()) continue;
    const std::string tag =
        r.run_id.substr(0, r.run_id.rfind("_r"));
    if (!seen.insert(tag).second) continue;
    const fs::path samples_path = dir / r.samples_csv;
    if (!fs::exists(samples_path)) continue;
    const Eigen::MatrixXd samples = read_dataset_csv(samples_path.string());
    if (samples.rows() < 2) continue;

    Svg svg(-1.5, 1.5, -1.5, 1.5, "Generated samples " + tag);
    for (Eigen::Index i = 0; i < samples.cols(); ++i)
      svg.circle(samples(0, i), samples(1, i), 1.5, "#1f77b4");
    svg.save((dir / ("samples_" + tag + ".svg")).string());
  }
}

}  // namespace

void emit_plots(const std::vector<RunRecord>& records,
                const std::string& output_dir) {
  std::vector<RunRecord> ok;
  for (const auto& r : records)
    if (!r.error) ok.push_back(r);
  if (ok.empty()) throw std::invalid_argument("emit_plots: no records");
  fs::create_directories(output_dir);
  const fs::path dir(output_dir);
  emit_auroc_vs_n(ok, dir);
  emit_auroc_vs_time(ok, dir);
  emit_sample_scatter(ok, dir);
}

}  // namespace holdpp
