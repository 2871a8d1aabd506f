#pragma once

#include "bunching/sample.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace bunching {

//! Outcome mean at one integer treatment level with a normal 95% interval.
struct ConditionalMeanRow
{
  double x = 0.0;
  double mean_y = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t count = 0;
};

struct KdeCurve
{
  double level = 0.0;
  std::vector<double> grid_y;
  std::vector<double> density;
};

//! Standardized sample quantiles against standard normal quantiles.
struct QqCurve
{
  double level = 0.0;
  std::vector<double> normal_quantile;
  std::vector<double> sample_quantile;
};

struct DiagnosticsBundle
{
  std::vector<ConditionalMeanRow> conditional_mean;
  std::vector<KdeCurve> kde;
  std::vector<QqCurve> qq;
  std::vector<std::string> warnings;
};

struct DiagnosticsOptions
{
  double kde_bandwidth = 100.0; // outcome units, Epanechnikov
  //! KDE grid spacing as a fraction of the bandwidth.
  double kde_step_fraction = 0.04;
  std::size_t qq_points = 200;
  //! Levels with fewer observations are skipped with a warning.
  std::size_t min_level_count = 10;
};

//! Treatment is binned to the nearest integer. Observation weights are ignored.
DiagnosticsBundle diagnostics(const Sample& sample, const DiagnosticsOptions& options = {});

//! Trapezoid integral of a curve on its grid.
double trapezoid(const std::vector<double>& grid, const std::vector<double>& values);

void write_conditional_mean_csv(const DiagnosticsBundle& bundle, const std::filesystem::path& path);
void write_kde_csv(const DiagnosticsBundle& bundle, const std::filesystem::path& path);
void write_qq_csv(const DiagnosticsBundle& bundle, const std::filesystem::path& path);

} // namespace bunching
