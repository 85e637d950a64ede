#pragma once

// Learning-curve SVG output: one chart per metric, each series drawn as a
// mean line over a +-1 std band. Output is a pure function of the input.

#include <string>
#include <vector>

namespace optail {

struct CurveSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> std;
};

/// Fixed viewport; the plot area is the viewport minus the margins.
struct Viewport {
  double width = 640.0;
  double height = 400.0;
  double margin_left = 60.0;
  double margin_right = 20.0;
  double margin_top = 30.0;
  double margin_bottom = 50.0;
};

/// Affine map from data coordinates to pixels, y pointing down.
struct AxisMap {
  Viewport vp;
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;

  double px(double x) const;
  double py(double y) const;
};

/// Data ranges over all finite points of all series (mean +- std for y).
/// Zero-width ranges are widened by 0.5 on each side.
AxisMap fit_axes(const std::vector<CurveSeries>& series, const Viewport& vp = {});

std::string render_svg(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<CurveSeries>& series,
                       const Viewport& vp = {});

/// Aggregate CSV as written by the bench: per cell and iteration, mean and std
/// of every metric.
struct AggregateCsv {
  std::vector<std::string> metrics;
  std::vector<std::string> cells;  ///< first-appearance order
  /// series[m][c]: metric m of cell c, x = interactions.
  std::vector<std::vector<CurveSeries>> series;
};

/// Throws std::runtime_error on missing files or malformed content.
AggregateCsv read_aggregate_csv(const std::string& path);

/// Writes <outdir>/<metric>.svg for every metric and returns the paths.
std::vector<std::string> render_curves(const std::string& aggregate_csv_path,
                                       const std::string& outdir);

}  // namespace optail
