#include "bunching/smoothers.hpp"

#include "bunching/error.hpp"
#include "bunching/simd/reductions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bunching {

namespace {

constexpr std::size_t exact_stage_one_limit = 2048;

[[noreturn]] void insufficient_support(double x0, double h)
{
  fail(ErrorKind::degenerate, "insufficient_support",
       "fewer than two distinct weighted points near x = " + std::to_string(x0) +
         " with bandwidth " + std::to_string(h) + "; increase the bandwidth");
}

std::vector<double> gather(std::span<const double> values, const std::vector<std::size_t>& rows)
{
  std::vector<double> out(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j)
    out[j] = values[rows[j]];
  return out;
}

} // namespace

LocalDesign make_local_design(std::span<const double> xs,
                              double x0,
                              double h,
                              KernelKind kernel,
                              const XFilter& filter,
                              std::span<const double> obs_weights)
{
  if (!(h > 0.0) || !std::isfinite(h))
    fail(ErrorKind::input, "invalid_bandwidth", "bandwidth must be positive");
  if (!obs_weights.empty() && obs_weights.size() != xs.size())
    fail(ErrorKind::input, "length_mismatch", "weights and x have different lengths");
  LocalDesign d;
  d.x0 = x0;
  d.h = h;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (filter && !filter(xs[i]))
      continue;
    const double u = xs[i] - x0;
    double w = kernel_eval(kernel, u / h);
    if (!obs_weights.empty())
      w *= obs_weights[i];
    if (w > 0.0) {
      d.rows.push_back(i);
      d.w.push_back(w);
      d.u.push_back(u);
    }
  }
  const bool distinct =
    !d.u.empty() && std::any_of(d.u.begin(), d.u.end(), [&](double u) { return u != d.u[0]; });
  if (!distinct)
    insufficient_support(x0, h);
  const auto s = simd::weighted_sums(d.w, d.u, d.u);
  d.sum_w = s.w;
  d.u_bar = s.wu / s.w;
  d.suu = simd::centered_sums(d.w, d.u, d.u, d.u_bar, d.u_bar).uu;
  d.n_eff = s.w * s.w / s.ww;
  if (!(d.suu > 0.0))
    insufficient_support(x0, h);
  return d;
}

LocalLinearFit fit_local_linear(const LocalDesign& design, std::span<const double> ys)
{
  const std::vector<double> y = gather(ys, design.rows);
  const auto s = simd::weighted_sums(design.w, design.u, y);
  const double y_bar = s.wy / s.w;
  const auto c = simd::centered_sums(design.w, design.u, y, design.u_bar, y_bar);
  LocalLinearFit fit;
  fit.slope = c.uy / design.suu;
  fit.intercept = y_bar - fit.slope * design.u_bar;
  fit.effective_n = design.sum_w;
  fit.x0 = design.x0;
  return fit;
}

LocalLinearFit local_linear(std::span<const double> xs,
                            std::span<const double> ys,
                            double x0,
                            double h,
                            KernelKind kernel,
                            const XFilter& filter,
                            std::span<const double> obs_weights)
{
  if (xs.size() != ys.size())
    fail(ErrorKind::input, "length_mismatch", "x and y have different lengths");
  return fit_local_linear(make_local_design(xs, x0, h, kernel, filter, obs_weights), ys);
}

ComplexLocalLinearFit local_linear(std::span<const double> xs,
                                   std::span<const std::complex<double>> ys,
                                   double x0,
                                   double h,
                                   KernelKind kernel,
                                   const XFilter& filter,
                                   std::span<const double> obs_weights)
{
  if (xs.size() != ys.size())
    fail(ErrorKind::input, "length_mismatch", "x and y have different lengths");
  const auto design = make_local_design(xs, x0, h, kernel, filter, obs_weights);
  std::vector<double> re(ys.size()), im(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    re[i] = ys[i].real();
    im[i] = ys[i].imag();
  }
  const auto fr = fit_local_linear(design, re);
  const auto fi = fit_local_linear(design, im);
  return { { fr.intercept, fi.intercept }, { fr.slope, fi.slope }, design.sum_w, x0 };
}

LocalLinearFit boundary_mean_and_slope(const Sample& sample, double h1, KernelKind kernel1)
{
  const double xb = sample.bunch_point();
  return local_linear(sample.treatment(), sample.outcome(), xb, h1, kernel1,
                      [xb](double x) { return x > xb; }, sample.weights());
}

double interior_mean(const Sample& sample, double x, double h, KernelKind kernel)
{
  const double xb = sample.bunch_point();
  if (!(x > xb))
    fail(ErrorKind::input, "x_not_above_bunch",
         "interior mean needs x above the bunching point");
  return local_linear(sample.treatment(), sample.outcome(), x, h, kernel,
                      [xb](double v) { return v > xb; }, sample.weights())
    .intercept;
}

double boundary_log_slope(std::span<const double> xs,
                          double xbar,
                          double h2,
                          std::span<const double> obs_weights)
{
  if (!(h2 > 0.0) || !std::isfinite(h2))
    fail(ErrorKind::input, "invalid_bandwidth", "h2 must be positive");
  double num = 0.0, den = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - xbar;
    if (!(d > 0.0 && d <= h2))
      continue;
    const double w = obs_weights.empty() ? 1.0 : obs_weights[i];
    if (!(w > 0.0))
      continue;
    any = true;
    num += w * (1.0 - 2.0 * d / h2);
    den += w * d * (1.0 - d / h2);
  }
  if (!any)
    fail(ErrorKind::degenerate, "empty_density_window",
         "no observations in the boundary density window; increase h2");
  if (den == 0.0)
    fail(ErrorKind::degenerate, "degenerate_density_window",
         "all observations in the boundary density window sit at its edge");
  return -num / den;
}

BoundaryDensity boundary_density(const Sample& sample, double h2, KernelKind kernel2)
{
  const double xb = sample.bunch_point();
  const auto& x = sample.treatment();
  BoundaryDensity out;
  out.log_slope = boundary_log_slope(x, xb, h2, sample.weights());
  double kernel_sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - xb;
    if (d > 0.0)
      kernel_sum += sample.weight(i) * kernel_eval(kernel2, d / h2);
  }
  const double normalizer = one_sided_exp_moment(kernel2, out.log_slope * h2);
  out.density = kernel_sum / (sample.total_weight() * h2) / normalizer;
  out.density_derivative = out.density * out.log_slope;
  return out;
}

double pinkse_bandwidth(double n_above, double pilot_density, double beta2)
{
  if (!(n_above > 0.0) || !(pilot_density > 0.0) || beta2 == 0.0 || !std::isfinite(beta2))
    fail(ErrorKind::input, "invalid_argument",
         "bandwidth rule needs positive n and density and nonzero curvature");
  return std::pow(72.0 / (n_above * pilot_density * beta2 * beta2), 0.2);
}

BoundaryVariance boundary_variance(const Sample& sample,
                                   double h_fit,
                                   double h_var,
                                   KernelKind kernel,
                                   bool leave_one_out)
{
  if (!(h_fit > 0.0) || !(h_var > 0.0))
    fail(ErrorKind::input, "invalid_bandwidth", "bandwidths must be positive");
  const double xb = sample.bunch_point();

  // Above-bunch observations sorted by treatment.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < sample.size(); ++i)
    if (sample.is_above(i) && sample.weight(i) > 0.0)
      order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sample.treatment()[a] < sample.treatment()[b];
  });
  const std::size_t m = order.size();
  std::vector<double> xs(m), ys(m), ws(m);
  for (std::size_t j = 0; j < m; ++j) {
    xs[j] = sample.treatment()[order[j]];
    ys[j] = sample.outcome()[order[j]];
    ws[j] = sample.weight(order[j]);
  }

  // Stage two only sees points with positive kernel weight at the boundary.
  std::size_t stage_two_end = m;
  if (kernel_is_compact(kernel))
    stage_two_end = static_cast<std::size_t>(
      std::upper_bound(xs.begin(), xs.end(), xb + h_var) - xs.begin());
  if (stage_two_end < 2)
    fail(ErrorKind::degenerate, "insufficient_support",
         "too few observations for the boundary variance; increase the bandwidth");

  auto design_at = [&](double x0) {
    std::size_t lo = 0, hi = m;
    if (kernel_is_compact(kernel)) {
      lo = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), x0 - h_fit) -
                                    xs.begin());
      hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x0 + h_fit) -
                                    xs.begin());
    }
    std::span<const double> wx(xs.data() + lo, hi - lo), ww(ws.data() + lo, hi - lo);
    auto d = make_local_design(wx, x0, h_fit, kernel, {}, ww);
    for (auto& r : d.rows)
      r += lo;
    return d;
  };

  std::vector<double> unique_x(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(stage_two_end));
  unique_x.erase(std::unique(unique_x.begin(), unique_x.end()), unique_x.end());

  BoundaryVariance out;
  std::vector<double> fitted(stage_two_end);
  if (leave_one_out || unique_x.size() <= exact_stage_one_limit) {
    std::size_t j = 0;
    for (double x0 : unique_x) {
      const auto d = design_at(x0);
      const auto fit = fit_local_linear(d, ys);
      const double self_kernel = kernel_eval(kernel, 0.0);
      for (; j < stage_two_end && xs[j] == x0; ++j) {
        if (!leave_one_out) {
          fitted[j] = fit.intercept;
          continue;
        }
        const double leverage =
          self_kernel * ws[j] * (1.0 / d.sum_w + d.u_bar * d.u_bar / d.suu);
        if (!(leverage < 1.0))
          fail(ErrorKind::degenerate, "insufficient_support",
               "leave-one-out fit is undefined; increase the bandwidth");
        fitted[j] = (fit.intercept - leverage * ys[j]) / (1.0 - leverage);
      }
    }
  } else {
    out.interpolated = true;
    const std::size_t g = exact_stage_one_limit;
    const double lo = unique_x.front(), hi = unique_x.back();
    const double step = (hi - lo) / static_cast<double>(g - 1);
    std::vector<double> node(g);
    for (std::size_t k = 0; k < g; ++k)
      node[k] = fit_local_linear(design_at(lo + step * static_cast<double>(k)), ys).intercept;
    for (std::size_t j = 0; j < stage_two_end; ++j) {
      const double pos = (xs[j] - lo) / step;
      const auto k = std::min(static_cast<std::size_t>(pos), g - 2);
      const double f = pos - static_cast<double>(k);
      fitted[j] = node[k] + f * (node[k + 1] - node[k]);
    }
  }

  std::vector<double> sq(stage_two_end);
  for (std::size_t j = 0; j < stage_two_end; ++j) {
    const double r = ys[j] - fitted[j];
    sq[j] = r * r;
  }
  std::span<const double> x2(xs.data(), stage_two_end), w2(ws.data(), stage_two_end);
  const auto fit = local_linear(x2, sq, xb, h_var, kernel, {}, w2);
  out.residuals = stage_two_end;
  out.sigma2 = fit.intercept;
  if (out.sigma2 < 0.0) {
    out.sigma2 = 0.0;
    out.floored = true;
  }
  return out;
}

} // namespace bunching
