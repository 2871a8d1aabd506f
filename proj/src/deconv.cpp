#include "bunching/deconv.hpp"

#include "bunching/error.hpp"
#include "bunching/simd/reductions.hpp"
#include "bunching/smoothers.hpp"
#include "bunching/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace bunching {

namespace {

constexpr double pi = std::numbers::pi;
// A band-limited inverse cannot exceed the height of the regularizer's own
// inverse transform; a ratio this close to 1 is a point mass at zero.
constexpr double point_mass_ratio = 0.8;

struct BunchedOutcomes
{
  std::vector<double> values;
  std::vector<double> weights;
};

BunchedOutcomes bunched_outcomes(const Sample& sample)
{
  BunchedOutcomes b;
  for (std::size_t i = 0; i < sample.size(); ++i)
    if (sample.is_bunched(i) && sample.weight(i) > 0.0) {
      b.values.push_back(sample.outcome()[i]);
      b.weights.push_back(sample.weight(i));
    }
  if (b.values.empty())
    fail(ErrorKind::input, "no_bunched_rows", "no observation at the bunching point");
  return b;
}

double kish(std::span<const double> w)
{
  double s = 0.0, s2 = 0.0;
  for (double v : w) {
    s += v;
    s2 += v * v;
  }
  return s * s / s2;
}

double default_half_width(const BunchedOutcomes& b)
{
  std::vector<double> v = b.values;
  std::sort(v.begin(), v.end());
  const double iqr = stats::quantile_sorted(v, 0.75) - stats::quantile_sorted(v, 0.25);
  if (!(iqr > 0.0))
    fail(ErrorKind::degenerate, "zero_outcome_spread",
         "bunched outcomes have zero interquartile range; set quadrature.half_width");
  return 10.0 / iqr;
}

// Grid layout shared by both noise models: half-width, cutoff and h4.
struct GridPlan
{
  double half_width = 0.0;
  double cutoff = 0.0;
  double h4 = 0.0;
  bool from_data = false;
};

// `modulus` gives |denominator| on a frequency; used only for the data-driven
// cutoff, which stops at the first grid frequency where the modulus falls
// below cutoff_constant * n_eff^(-1/4).
template<typename Modulus>
GridPlan plan_grid(const EstimationConfig& config,
                   double half_width,
                   double n_eff,
                   std::size_t intervals,
                   Modulus&& modulus)
{
  GridPlan plan;
  plan.half_width = half_width;
  if (config.h4) {
    plan.h4 = *config.h4;
    plan.cutoff = config.kernel4 == KernelKind::sinc_flat ? std::min(half_width, 1.0 / plan.h4)
                                                          : half_width;
    return plan;
  }
  plan.from_data = true;
  const double threshold = config.cutoff_constant * std::pow(n_eff, -0.25);
  const double step = half_width / static_cast<double>(intervals);
  const std::vector<double> mod = modulus(step, intervals + 1);
  plan.cutoff = half_width;
  for (std::size_t k = 1; k <= intervals; ++k)
    if (mod[k] < threshold) {
      plan.cutoff = step * static_cast<double>(std::max<std::size_t>(k, 2));
      break;
    }
  plan.h4 = 1.0 / plan.cutoff;
  return plan;
}

CfEvaluation make_grid(const GridPlan& plan, const EstimationConfig& config, std::size_t intervals)
{
  CfEvaluation cf;
  cf.half_width = plan.half_width;
  cf.cutoff = plan.cutoff;
  cf.h4 = plan.h4;
  cf.cutoff_from_data = plan.from_data;
  const double step = plan.cutoff / static_cast<double>(intervals);
  cf.xi.resize(intervals + 1);
  cf.regularizer.resize(intervals + 1);
  cf.quad_weights.assign(intervals + 1, step);
  cf.quad_weights.front() = cf.quad_weights.back() = 0.5 * step;
  for (std::size_t k = 0; k <= intervals; ++k) {
    cf.xi[k] = step * static_cast<double>(k);
    cf.regularizer[k] = kernel_ft(config.kernel4, plan.h4 * cf.xi[k]).real();
  }
  return cf;
}

struct BoundaryTransform
{
  LocalDesign design;
  std::vector<double> y;  // centered outcomes of the design rows
  std::vector<double> wc; // w * (u - u_bar)
};

BoundaryTransform boundary_transform(const Sample& sample, double h3, KernelKind kernel3, double shift)
{
  const double xb = sample.bunch_point();
  BoundaryTransform bt{ make_local_design(sample.treatment(), xb, h3, kernel3,
                                          [xb](double x) { return x > xb; }, sample.weights()),
                        {},
                        {} };
  const auto& d = bt.design;
  bt.y.resize(d.rows.size());
  bt.wc.resize(d.rows.size());
  for (std::size_t j = 0; j < d.rows.size(); ++j) {
    bt.y[j] = sample.outcome()[d.rows[j]] - shift;
    bt.wc[j] = d.w[j] * (d.u[j] - d.u_bar);
  }
  return bt;
}

// Intercept of the complex local linear fit for every grid frequency.
std::vector<std::complex<double>> boundary_cf_grid(const BoundaryTransform& bt, double step, std::size_t count)
{
  std::vector<std::complex<double>> t0(count), t1(count);
  simd::phase_sums(bt.y, bt.design.w, bt.wc, step, t0, t1);
  const auto& d = bt.design;
  std::vector<std::complex<double>> out(count);
  for (std::size_t k = 0; k < count; ++k)
    out[k] = t0[k] / d.sum_w - (t1[k] / d.suu) * d.u_bar;
  return out;
}

double bunched_shift(const BunchedOutcomes& b)
{
  return stats::quantile(b.values, 0.5);
}

std::size_t half_intervals(const EstimationConfig& config)
{
  return static_cast<std::size_t>(config.quadrature.nodes / 2);
}

} // namespace

std::complex<double> ecf(std::span<const double> values, double xi)
{
  if (values.empty())
    fail(ErrorKind::input, "empty_input", "characteristic function of an empty sample");
  double re = 0.0, im = 0.0;
  for (double v : values) {
    re += std::cos(xi * v);
    im += std::sin(xi * v);
  }
  const double n = static_cast<double>(values.size());
  return { re / n, im / n };
}

std::vector<std::complex<double>> ecf_grid(std::span<const double> values,
                                           std::span<const double> weights,
                                           double step,
                                           std::size_t count)
{
  if (values.empty())
    fail(ErrorKind::input, "empty_input", "characteristic function of an empty sample");
  std::vector<double> unit;
  if (weights.empty()) {
    unit.assign(values.size(), 1.0);
    weights = unit;
  }
  double total = 0.0;
  for (double w : weights)
    total += w;
  std::vector<std::complex<double>> out(count);
  simd::phase_sums(values, weights, {}, step, out, {});
  for (auto& z : out)
    z /= total;
  if (count > 0)
    out[0] = 1.0;
  return out;
}

std::complex<double> boundary_cf(const Sample& sample, double xi, double h3, KernelKind kernel3)
{
  std::vector<std::complex<double>> phase(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i)
    phase[i] = std::polar(1.0, xi * sample.outcome()[i]);
  const double xb = sample.bunch_point();
  return local_linear(sample.treatment(), phase, xb, h3, kernel3,
                      [xb](double x) { return x > xb; }, sample.weights())
    .intercept;
}

CfEvaluation evaluate_cf(const Sample& sample, const EstimationConfig& config)
{
  validate(config);
  const auto bunched = bunched_outcomes(sample);
  const double shift = bunched_shift(bunched);
  const auto bt = boundary_transform(sample, config.h3, config.kernel3, shift);
  const std::size_t intervals = half_intervals(config);
  const double half_width = config.quadrature.half_width.value_or(default_half_width(bunched));

  const auto plan = plan_grid(config, half_width, bt.design.n_eff, intervals,
                              [&](double step, std::size_t count) {
                                const auto den = boundary_cf_grid(bt, step, count);
                                std::vector<double> mod(count);
                                for (std::size_t k = 0; k < count; ++k)
                                  mod[k] = std::abs(den[k]);
                                return mod;
                              });
  CfEvaluation cf = make_grid(plan, config, intervals);
  cf.shift = shift;
  const double step = cf.xi[1];
  std::vector<double> centered = bunched.values;
  for (double& v : centered)
    v -= shift;
  cf.numerator = ecf_grid(centered, bunched.weights, step, cf.xi.size());
  cf.denominator = boundary_cf_grid(bt, step, cf.xi.size());
  cf.denominator[0] = 1.0;
  return cf;
}

CfEvaluation evaluate_cf_normal(const Sample& sample,
                                double mu_plus,
                                double sigma2,
                                const EstimationConfig& config)
{
  validate(config);
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    fail(ErrorKind::degenerate, "zero_boundary_variance",
         "normal boundary model needs a positive variance");
  const auto bunched = bunched_outcomes(sample);
  const double shift = bunched_shift(bunched);
  const std::size_t intervals = half_intervals(config);
  const double half_width = config.quadrature.half_width.value_or(default_half_width(bunched));
  const auto plan = plan_grid(config, half_width, kish(bunched.weights), intervals,
                              [&](double step, std::size_t count) {
                                std::vector<double> mod(count);
                                for (std::size_t k = 0; k < count; ++k) {
                                  const double xi = step * static_cast<double>(k);
                                  mod[k] = std::exp(-0.5 * sigma2 * xi * xi);
                                }
                                return mod;
                              });
  CfEvaluation cf = make_grid(plan, config, intervals);
  cf.shift = shift;
  std::vector<double> centered = bunched.values;
  for (double& v : centered)
    v -= shift;
  cf.numerator = ecf_grid(centered, bunched.weights, cf.xi[1], cf.xi.size());
  cf.denominator.resize(cf.xi.size());
  for (std::size_t k = 0; k < cf.xi.size(); ++k) {
    const double xi = cf.xi[k];
    cf.denominator[k] = std::polar(std::exp(-0.5 * sigma2 * xi * xi), (mu_plus - shift) * xi);
  }
  return cf;
}

SelectionDensity invert_at_zero(const CfEvaluation& cf,
                                const EstimationConfig& config,
                                InversionMode mode,
                                int support_side)
{
  if (mode == InversionMode::one_sided && support_side != -1 && support_side != 1)
    fail(ErrorKind::input, "invalid_argument", "support side must be -1 or +1");
  const std::size_t m = cf.xi.size();
  SelectionDensity out;
  out.mode = mode;
  out.support_side = mode == InversionMode::one_sided ? support_side : 0;
  out.cutoff = cf.cutoff;
  out.h4 = cf.h4;
  out.grid_points = m;

  // Integrals over the full symmetric grid reduce to the half grid: the real
  // part of the integrand is even and the imaginary part odd.
  double reg_mass = 0.0, excluded_mass = 0.0;
  double a = 0.0, b = 0.0, kept_mass = 0.0, im_full = 0.0, gap_integral = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double q = cf.quad_weights[k], r = cf.regularizer[k], xi = cf.xi[k];
    reg_mass += q * r;
    const bool excluded = std::abs(cf.denominator[k]) < config.quadrature.floor;
    const double kept = excluded ? 0.0 : r;
    if (excluded)
      excluded_mass += q * r;
    if (k > 0)
      gap_integral += q * (1.0 - kept) / (xi * xi);
    else if (config.kernel4 == KernelKind::gaussian && !excluded)
      gap_integral += q * 0.5 * cf.h4 * cf.h4;
    if (excluded)
      continue;
    const std::complex<double> ratio = cf.numerator[k] / cf.denominator[k];
    a += q * r * ratio.real();
    b += q * r * xi * ratio.imag();
    kept_mass += q * r;
    // +xi and -xi contributions to the imaginary part, summed explicitly.
    im_full += q * r * (ratio.imag() + std::conj(ratio).imag());
  }
  a /= pi;
  b /= pi;
  const double c_b = kept_mass / pi;
  out.excluded_fraction = reg_mass > 0.0 ? excluded_mass / reg_mass : 0.0;
  out.imaginary_residual = std::abs(im_full) / (2.0 * pi);

  if (out.excluded_fraction > config.quadrature.max_excluded)
    fail(ErrorKind::degenerate, "unstable_inversion",
         "boundary characteristic function is below the floor on " +
           std::to_string(100.0 * out.excluded_fraction) +
           "% of the regularizer mass; reduce the cutoff or raise h4");
  if (out.excluded_fraction > 0.0)
    out.warnings.push_back("excluded " + std::to_string(100.0 * out.excluded_fraction) +
                           "% of regularizer mass below the denominator floor");
  if (!(c_b > 0.0) || a >= point_mass_ratio * c_b)
    fail(ErrorKind::degenerate, "no_selection",
         "bunched and boundary outcome distributions coincide; the selection term is a "
         "point mass at zero (use the theta = 0 path)");

  if (mode == InversionMode::symmetric) {
    out.value_at_zero = a;
    if (!(a > 0.0))
      fail(ErrorKind::degenerate, "nonpositive_density",
           "inverted selection density at zero is not positive");
    out.log_derivative_at_zero = b / a;
  } else {
    // Density g0 + g1 v on one side of zero, zero on the other. The two
    // band-limited functionals mix value and slope through these constants.
    const double c_a = -(gap_integral + 1.0 / cf.cutoff) / pi;
    const double bb = support_side < 0 ? b : -b;
    const double det = 0.25 + c_a * c_b;
    const double g0 = (0.5 * a - c_a * bb) / det;
    double g1 = (0.5 * bb + c_b * a) / det;
    if (support_side > 0)
      g1 = -g1;
    if (!(g0 > 0.0))
      fail(ErrorKind::degenerate, "nonpositive_density",
           "inverted selection density at zero is not positive");
    out.value_at_zero = g0;
    out.log_derivative_at_zero = g1 / g0;
  }
  out.unstable = out.imaginary_residual > config.quadrature.imaginary_tolerance * out.value_at_zero;
  if (out.unstable)
    out.warnings.push_back("imaginary residual exceeds tolerance");
  return out;
}

SelectionDensity selection_density(const Sample& sample,
                                   const EstimationConfig& config,
                                   InversionMode mode,
                                   int support_side)
{
  return invert_at_zero(evaluate_cf(sample, config), config, mode, support_side);
}

SelectionDensity selection_density_normal_plugin(const Sample& sample,
                                                 double sigma2_boundary,
                                                 const EstimationConfig& config,
                                                 InversionMode mode,
                                                 int support_side)
{
  const double mu_plus =
    boundary_mean_and_slope(sample, config.mean_bandwidth(), config.kernel1).intercept;
  return invert_at_zero(evaluate_cf_normal(sample, mu_plus, sigma2_boundary, config), config,
                        mode, support_side);
}

SelectionDensity selection_density_closed_form(double mu0, double var0, double muP, double varP)
{
  if (!(var0 > varP))
    fail(ErrorKind::degenerate, "nonpositive_selection_variance",
         "normal-normal model needs the bunched variance to exceed the boundary variance");
  const double mu = mu0 - muP, var = var0 - varP;
  SelectionDensity out;
  out.value_at_zero = std::exp(-0.5 * mu * mu / var) / std::sqrt(2.0 * pi * var);
  out.log_derivative_at_zero = mu / var;
  return out;
}

void write_cf_csv(const CfEvaluation& cf, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    fail(ErrorKind::input, "cannot_write", "cannot write '" + path.string() + "'");
  out << "xi,num_re,num_im,den_re,den_im\n";
  for (std::size_t k = 0; k < cf.xi.size(); ++k)
    out << format_double(cf.xi[k]) << ',' << format_double(cf.numerator[k].real()) << ','
        << format_double(cf.numerator[k].imag()) << ','
        << format_double(cf.denominator[k].real()) << ','
        << format_double(cf.denominator[k].imag()) << '\n';
}

} // namespace bunching
