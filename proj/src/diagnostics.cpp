#include "bunching/diagnostics.hpp"

#include "bunching/error.hpp"
#include "bunching/kernels.hpp"
#include "bunching/stats.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <fstream>
#include <map>

namespace bunching {

namespace {

constexpr std::size_t max_kde_grid = 20000;

std::ofstream open_csv(const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    fail(ErrorKind::input, "unwritable_output", "cannot write " + path.string());
  return out;
}

KdeCurve kde(double level, const std::vector<double>& sorted, const DiagnosticsOptions& options)
{
  const double h = options.kde_bandwidth;
  const double lo = sorted.front() - h;
  const double hi = sorted.back() + h;
  const auto intervals = static_cast<std::size_t>(
    std::clamp(std::ceil((hi - lo) / (options.kde_step_fraction * h)), 16.0,
               static_cast<double>(max_kde_grid)));
  KdeCurve c;
  c.level = level;
  c.grid_y.resize(intervals + 1);
  c.density.assign(intervals + 1, 0.0);
  const double scale = 1.0 / (static_cast<double>(sorted.size()) * h);
  for (std::size_t g = 0; g <= intervals; ++g) {
    const double y = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(intervals);
    c.grid_y[g] = y;
    // Only observations within one bandwidth contribute.
    auto first = std::lower_bound(sorted.begin(), sorted.end(), y - h);
    auto last = std::upper_bound(first, sorted.end(), y + h);
    double s = 0.0;
    for (auto it = first; it != last; ++it)
      s += kernel_eval(KernelKind::epanechnikov, (*it - y) / h);
    c.density[g] = s * scale;
  }
  return c;
}

QqCurve qq(double level, const std::vector<double>& sorted, std::size_t points)
{
  const double m = stats::mean(sorted);
  const double sd = stats::stddev(sorted);
  const boost::math::normal unit;
  QqCurve c;
  c.level = level;
  const std::size_t n = sorted.size();
  const std::size_t k = std::min(n, points);
  for (std::size_t i = 0; i < k; ++i) {
    const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(k);
    const double q = k == n ? sorted[i] : stats::quantile_sorted(sorted, p);
    c.normal_quantile.push_back(boost::math::quantile(unit, p));
    c.sample_quantile.push_back(sd > 0.0 ? (q - m) / sd : 0.0);
  }
  return c;
}

} // namespace

double trapezoid(const std::vector<double>& grid, const std::vector<double>& values)
{
  double s = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    s += 0.5 * (grid[i] - grid[i - 1]) * (values[i] + values[i - 1]);
  return s;
}

DiagnosticsBundle diagnostics(const Sample& sample, const DiagnosticsOptions& options)
{
  if (!(options.kde_bandwidth > 0.0) || !(options.kde_step_fraction > 0.0))
    fail(ErrorKind::input, "invalid_argument", "KDE bandwidth and grid step must be positive");
  if (sample.size() == 0)
    fail(ErrorKind::input, "empty_sample", "diagnostics need at least one row");
  std::map<double, std::vector<double>> levels;
  for (std::size_t i = 0; i < sample.size(); ++i)
    levels[std::round(sample.treatment()[i])].push_back(sample.outcome()[i]);

  DiagnosticsBundle out;
  for (auto& [level, ys] : levels) {
    std::sort(ys.begin(), ys.end());
    ConditionalMeanRow row;
    row.x = level;
    row.count = ys.size();
    row.mean_y = stats::mean(ys);
    const double half = 1.96 * stats::stddev(ys) / std::sqrt(static_cast<double>(ys.size()));
    row.ci_lo = row.mean_y - half;
    row.ci_hi = row.mean_y + half;
    out.conditional_mean.push_back(row);
    if (ys.size() < options.min_level_count) {
      out.warnings.push_back("level " + format_double(level) + " has " + std::to_string(ys.size()) +
                             " observations; KDE and QQ skipped");
      continue;
    }
    out.kde.push_back(kde(level, ys, options));
    out.qq.push_back(qq(level, ys, options.qq_points));
  }
  return out;
}

void write_conditional_mean_csv(const DiagnosticsBundle& bundle, const std::filesystem::path& path)
{
  auto out = open_csv(path);
  out << "x,mean_y,ci_lo,ci_hi,count\n";
  for (const auto& r : bundle.conditional_mean)
    out << format_double(r.x) << ',' << format_double(r.mean_y) << ',' << format_double(r.ci_lo) << ','
        << format_double(r.ci_hi) << ',' << r.count << '\n';
}

void write_kde_csv(const DiagnosticsBundle& bundle, const std::filesystem::path& path)
{
  auto out = open_csv(path);
  out << "level,grid_y,density\n";
  for (const auto& c : bundle.kde)
    for (std::size_t i = 0; i < c.grid_y.size(); ++i)
      out << format_double(c.level) << ',' << format_double(c.grid_y[i]) << ','
          << format_double(c.density[i]) << '\n';
}

void write_qq_csv(const DiagnosticsBundle& bundle, const std::filesystem::path& path)
{
  auto out = open_csv(path);
  out << "level,normal_quantile,sample_quantile\n";
  for (const auto& c : bundle.qq)
    for (std::size_t i = 0; i < c.normal_quantile.size(); ++i)
      out << format_double(c.level) << ',' << format_double(c.normal_quantile[i]) << ','
          << format_double(c.sample_quantile[i]) << '\n';
}

} // namespace bunching
