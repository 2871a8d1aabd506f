#include "bunching/kernels.hpp"

#include "bunching/error.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace bunching {

namespace {

constexpr double inv_sqrt_2pi = 0.3989422804014327;

// sin(t)/t with a Taylor branch so that t = 0 is exact.
double sinc_ratio(double t)
{
  if (std::abs(t) < 1e-4) {
    const double t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
  }
  return std::sin(t) / t;
}

} // namespace

double kernel_support(KernelKind kind)
{
  return kernel_is_compact(kind) ? 1.0
                                 : std::numeric_limits<double>::infinity();
}

bool kernel_is_compact(KernelKind kind)
{
  return kind != KernelKind::gaussian && kind != KernelKind::sinc_flat;
}

double kernel_eval(KernelKind kind, double u)
{
  const double a = std::abs(u);
  switch (kind) {
    case KernelKind::triangular:
      return a <= 1.0 ? 1.0 - a : 0.0;
    case KernelKind::epanechnikov:
      return a <= 1.0 ? 0.75 * (1.0 - a * a) : 0.0;
    case KernelKind::uniform:
      return a <= 1.0 ? 0.5 : 0.0;
    case KernelKind::gaussian:
      return inv_sqrt_2pi * std::exp(-0.5 * a * a);
    case KernelKind::sinc_flat:
      return sinc_ratio(a) / std::numbers::pi;
  }
  return 0.0;
}

std::complex<double> kernel_ft(KernelKind kind, double t)
{
  const double a = std::abs(t);
  switch (kind) {
    case KernelKind::triangular: {
      const double r = sinc_ratio(0.5 * a);
      return r * r;
    }
    case KernelKind::epanechnikov: {
      if (a < 1e-3) {
        // 3(sin t - t cos t)/t^3 = 1 - t^2/10 + t^4/280 - ...
        const double a2 = a * a;
        return 1.0 - a2 / 10.0 + a2 * a2 / 280.0;
      }
      return 3.0 * (std::sin(a) - a * std::cos(a)) / (a * a * a);
    }
    case KernelKind::uniform:
      return sinc_ratio(a);
    case KernelKind::gaussian:
      return std::exp(-0.5 * a * a);
    case KernelKind::sinc_flat:
      return a <= 1.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

double one_sided_exp_moment(KernelKind kind, double t)
{
  switch (kind) {
    case KernelKind::epanechnikov: {
      if (std::abs(t) < 0.5) {
        // 3/4 * sum_k t^k/k! * 2/((k+1)(k+3)); the closed form cancels here
        double term = 1.0, sum = 0.0;
        for (int k = 0; k < 24; ++k) {
          if (k > 0)
            term *= t / k;
          sum += term * 2.0 / ((k + 1.0) * (k + 3.0));
        }
        return 0.75 * sum;
      }
      const double t3 = t * t * t;
      return 0.75 * (2.0 - t * t - std::exp(t) * (2.0 - 2.0 * t)) / t3;
    }
    case KernelKind::triangular: {
      if (std::abs(t) < 0.5) {
        // sum_k t^k / (k+2)!
        double term = 0.5, sum = 0.0;
        for (int k = 0; k < 24; ++k) {
          if (k > 0)
            term *= t / (k + 2.0);
          sum += term;
        }
        return sum;
      }
      return (std::expm1(t) - t) / (t * t);
    }
    case KernelKind::uniform: {
      if (std::abs(t) < 1e-8)
        return 0.5 + 0.25 * t;
      return 0.5 * std::expm1(t) / t;
    }
    case KernelKind::gaussian:
    case KernelKind::sinc_flat:
      break;
  }
  fail(ErrorKind::input,
       "unsupported_boundary_kernel",
       "boundary density needs a compact nonnegative kernel, got " +
         std::string(to_string(kind)));
}

std::string_view to_string(KernelKind kind)
{
  switch (kind) {
    case KernelKind::triangular:
      return "triangular";
    case KernelKind::epanechnikov:
      return "epanechnikov";
    case KernelKind::uniform:
      return "uniform";
    case KernelKind::gaussian:
      return "gaussian";
    case KernelKind::sinc_flat:
      return "sinc_flat";
  }
  return "unknown";
}

std::optional<KernelKind> parse_kernel(std::string_view name)
{
  static constexpr std::array kinds{ KernelKind::triangular,
                                     KernelKind::epanechnikov,
                                     KernelKind::uniform,
                                     KernelKind::gaussian,
                                     KernelKind::sinc_flat };
  for (auto k : kinds)
    if (to_string(k) == name)
      return k;
  return std::nullopt;
}

KernelKind kernel_from_string(std::string_view name)
{
  if (auto k = parse_kernel(name))
    return *k;
  fail(ErrorKind::input, "unknown_kernel",
       "unknown kernel '" + std::string(name) + "'");
}

} // namespace bunching
