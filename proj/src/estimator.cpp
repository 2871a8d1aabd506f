#include "bunching/estimator.hpp"

#include "bunching/bootstrap.hpp"
#include "bunching/error.hpp"
#include "bunching/smoothers.hpp"

#include <algorithm>
#include <cmath>

namespace bunching {

namespace {

double bunched_mean(const Sample& sample)
{
  double sw = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i)
    if (sample.is_bunched(i)) {
      sw += sample.weight(i);
      swy += sample.weight(i) * sample.outcome()[i];
    }
  if (!(sw > 0.0))
    fail(ErrorKind::input, "no_bunched_rows", "no weighted mass at the bunching point");
  return swy / sw;
}

double raw_gap(const Sample& sample, const EstimationConfig& config)
{
  return boundary_mean_and_slope(sample, config.mean_bandwidth(), config.kernel1).intercept -
         bunched_mean(sample);
}

int sign_with_tolerance(double gap, double tolerance)
{
  if (std::abs(gap) <= tolerance)
    return 0;
  return gap > 0.0 ? 1 : -1;
}

// Stream of replicate seeds for the theta tolerance, kept apart from the
// inference bootstrap so the two never share resamples.
constexpr std::uint64_t theta_seed_salt = 0x7468657461ull;

// Resamples reuse the tolerance found on the full sample, so a bootstrap
// theta rule is not rerun inside every replicate.
EstimationConfig replicate_config(const EstimationConfig& config, double tolerance)
{
  EstimationConfig c = config;
  c.theta_rule = ThetaRule::fixed;
  c.theta_tolerance = tolerance;
  return c;
}

} // namespace

ThetaResult theta(const Sample& sample, const EstimationConfig& config)
{
  validate(config);
  check_estimable(sample);
  ThetaResult out;
  out.boundary_mean =
    boundary_mean_and_slope(sample, config.mean_bandwidth(), config.kernel1).intercept;
  out.bunched_mean = bunched_mean(sample);
  out.gap = out.boundary_mean - out.bunched_mean;
  out.tolerance_used = config.theta_tolerance;
  if (config.theta_rule == ThetaRule::bootstrap) {
    const auto boot = bootstrap(
      sample, [&](const Sample& s) { return std::vector<double>{ raw_gap(s, config) }; },
      config.theta_replications, config.bootstrap.seed ^ theta_seed_salt, config.bootstrap.threads);
    out.gap_se = boot.se.front();
    out.tolerance_used = config.theta_z * boot.se.front();
  }
  out.theta = sign_with_tolerance(out.gap, out.tolerance_used);
  return out;
}

AmeEstimate ame(const Sample& sample, const EstimationConfig& config)
{
  validate(config);
  check_estimable(sample);
  AmeEstimate est;
  est.h1 = config.h1;
  est.h2 = config.h2;
  est.h3 = config.h3;
  est.h_mean = config.mean_bandwidth();

  const auto slope_fit = boundary_mean_and_slope(sample, config.h1, config.kernel1);
  est.m_slope = slope_fit.slope;

  const auto th = theta(sample, config);
  est.theta = th.theta;
  est.gap = th.gap;
  est.theta_tolerance = th.tolerance_used;
  est.boundary_mean = th.boundary_mean;
  est.bunched_mean = th.bunched_mean;

  const auto density = boundary_density(sample, config.h2, config.kernel2);
  est.f_x_boundary = density.density;
  est.f_x_log_slope = density.log_slope;
  est.bunch_mass = sample.bunch_mass();

  if (est.theta == 0) {
    est.s_prime = 0.0;
    est.ame = est.m_slope;
    return est;
  }

  // Under a monotone selection function the bunched selection term lies on
  // the side of zero opposite to theta.
  const int side = -est.theta;
  SelectionDensity sd;
  try {
    if (config.noise_model == NoiseModel::nonparametric) {
      sd = selection_density(sample, config, config.inversion, side);
    } else {
      const auto var = boundary_variance(sample, config.h1, config.h1, config.kernel1,
                                         config.leave_one_out_variance);
      est.boundary_variance = var.sigma2;
      if (var.floored)
        est.warnings.push_back("boundary variance floored at zero");
      sd = selection_density_normal_plugin(sample, var.sigma2, config, config.inversion, side);
    }
  } catch (const Error& e) {
    if (e.code() == "no_selection")
      fail(ErrorKind::degenerate, "inconsistent_deconvolution",
           "outcome discontinuity has sign " + std::to_string(est.theta) +
             " but the deconvolution finds no selection; consider the theta tolerance");
    throw;
  }
  for (const auto& w : sd.warnings)
    est.warnings.push_back(w);
  est.selection_density_at_zero = sd.value_at_zero;
  est.selection_log_derivative = sd.log_derivative_at_zero;
  est.selection = sd;
  est.s_prime = est.theta * (est.f_x_boundary / est.bunch_mass) / sd.value_at_zero;
  est.ame = est.m_slope - est.theta * (est.f_x_boundary / est.bunch_mass) / sd.value_at_zero;
  return est;
}

AttEstimate att_from_components(const AmeEstimate& c,
                                const Sample& sample,
                                double x,
                                int degree,
                                const EstimationConfig& config)
{
  if (degree != 1 && degree != 2)
    fail(ErrorKind::input, "invalid_degree", "ATT degree must be 1 or 2");
  const double xb = sample.bunch_point();
  if (!(x >= xb))
    fail(ErrorKind::input, "x_below_bunch", "ATT is defined at or above the bunching point");
  AttEstimate out;
  out.x = x;
  out.degree = degree;
  out.correction_terms.assign(static_cast<std::size_t>(degree), 0.0);
  if (x == xb)
    return out;

  const double dx = x - xb;
  out.m_at_x =
    interior_mean(sample, x, config.interior_bandwidth(), config.kernel1) - c.boundary_mean;
  out.correction_terms[0] = c.s_prime * dx;
  if (degree == 2) {
    const double log_derivative = c.selection_log_derivative.value_or(0.0);
    const double s_second =
      c.s_prime * c.f_x_log_slope - c.s_prime * c.s_prime * log_derivative;
    out.correction_terms[1] = s_second * dx * dx / 2.0;
  }
  double total = 0.0;
  for (double t : out.correction_terms)
    total += t;
  out.att = out.m_at_x - total;
  return out;
}

AttEstimate att(const Sample& sample, double x, int degree, const EstimationConfig& config)
{
  const auto components = ame(sample, config);
  return att_from_components(components, sample, x, degree, config);
}

std::vector<AttEstimate> att_curve(const Sample& sample,
                                   std::span<const double> xs,
                                   int degree,
                                   const EstimationConfig& config)
{
  std::vector<double> grid(xs.begin(), xs.end());
  std::sort(grid.begin(), grid.end());
  const auto components = ame(sample, config);
  std::vector<AttEstimate> out;
  out.reserve(grid.size());
  for (double x : grid)
    out.push_back(att_from_components(components, sample, x, degree, config));
  return out;
}

AmeEstimate ame_with_inference(const Sample& sample, const EstimationConfig& config)
{
  auto est = ame(sample, config);
  const int b = config.bootstrap.replications;
  if (b == 0)
    return est;
  const auto rc = replicate_config(config, est.theta_tolerance);
  const auto boot = bootstrap(
    sample, [&](const Sample& s) { return std::vector<double>{ ame(s, rc).ame }; }, b,
    config.bootstrap.seed, config.bootstrap.threads);
  est.se = boot.se.front();
  est.ci = boot.ci.front();
  est.bootstrap_replications = b;
  est.bootstrap_failed = boot.failed;
  return est;
}

std::vector<AttEstimate> att_curve_with_inference(const Sample& sample,
                                                  std::span<const double> xs,
                                                  int degree,
                                                  const EstimationConfig& config)
{
  std::vector<double> grid(xs.begin(), xs.end());
  std::sort(grid.begin(), grid.end());
  const auto components = ame(sample, config);
  std::vector<AttEstimate> curve;
  for (double x : grid)
    curve.push_back(att_from_components(components, sample, x, degree, config));
  const int b = config.bootstrap.replications;
  if (b == 0)
    return curve;
  const auto rc = replicate_config(config, components.theta_tolerance);
  const auto boot = bootstrap(
    sample,
    [&](const Sample& s) {
      std::vector<double> v;
      for (const auto& a : att_curve(s, grid, degree, rc))
        v.push_back(a.att);
      return v;
    },
    b, config.bootstrap.seed, config.bootstrap.threads);
  for (std::size_t j = 0; j < curve.size(); ++j) {
    curve[j].se = boot.se[j];
    curve[j].ci = boot.ci[j];
  }
  return curve;
}

} // namespace bunching
