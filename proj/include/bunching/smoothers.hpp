#pragma once

#include "bunching/kernels.hpp"
#include "bunching/sample.hpp"

#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace bunching {

template<typename T>
struct LocalLinearFitT
{
  T intercept{};
  T slope{};
  double effective_n = 0.0; // sum of kernel weights
  double x0 = 0.0;
};

using LocalLinearFit = LocalLinearFitT<double>;
using ComplexLocalLinearFit = LocalLinearFitT<std::complex<double>>;

using XFilter = std::function<bool(double)>;

//! Rows carrying positive weight in a local linear fit at x0, with the
//! weighted first and centered second moments of the offsets u = x - x0.
struct LocalDesign
{
  double x0 = 0.0;
  double h = 0.0;
  std::vector<std::size_t> rows;
  std::vector<double> w;
  std::vector<double> u;
  double sum_w = 0.0;
  double u_bar = 0.0;
  double suu = 0.0;   // sum w (u - u_bar)^2
  double n_eff = 0.0; // Kish effective size (sum w)^2 / sum w^2
};

//! Throws a degenerate error when fewer than two distinct x values carry
//! weight (the bandwidth is too small).
LocalDesign make_local_design(std::span<const double> xs,
                              double x0,
                              double h,
                              KernelKind kernel,
                              const XFilter& filter = {},
                              std::span<const double> obs_weights = {});

LocalLinearFit fit_local_linear(const LocalDesign& design, std::span<const double> ys);

LocalLinearFit local_linear(std::span<const double> xs,
                            std::span<const double> ys,
                            double x0,
                            double h,
                            KernelKind kernel,
                            const XFilter& filter = {},
                            std::span<const double> obs_weights = {});

//! Complex response; identical to separate fits of real and imaginary parts.
ComplexLocalLinearFit local_linear(std::span<const double> xs,
                                   std::span<const std::complex<double>> ys,
                                   double x0,
                                   double h,
                                   KernelKind kernel,
                                   const XFilter& filter = {},
                                   std::span<const double> obs_weights = {});

//! Intercept and slope at the bunching point from observations above it.
LocalLinearFit boundary_mean_and_slope(const Sample& sample, double h1, KernelKind kernel1);

//! E[Y | X = x] for x above the bunching point.
double interior_mean(const Sample& sample, double x, double h, KernelKind kernel);

struct BoundaryDensity
{
  double log_slope = 0.0;
  double density = 0.0;
  double density_derivative = 0.0;
};

//! Slope of the log density just above xbar from the window (xbar, xbar + h2].
double boundary_log_slope(std::span<const double> xs,
                          double xbar,
                          double h2,
                          std::span<const double> obs_weights = {});

//! Unconditional density just above the bunching point, normalized by the
//! total (weighted) sample size with an exponential-tilt boundary correction.
BoundaryDensity boundary_density(const Sample& sample, double h2, KernelKind kernel2);

//! Rule-of-thumb boundary density bandwidth (advisory).
double pinkse_bandwidth(double n_above, double pilot_density, double beta2);

struct BoundaryVariance
{
  double sigma2 = 0.0;
  bool floored = false;      // stage-two intercept was negative
  bool interpolated = false; // stage-one fits taken on a grid
  std::size_t residuals = 0; // observations entering stage two
};

//! Residual variance of Y at the boundary: local linear fit of Y, then a
//! local linear fit of the squared residuals evaluated at the bunching point.
BoundaryVariance boundary_variance(const Sample& sample,
                                   double h_fit,
                                   double h_var,
                                   KernelKind kernel,
                                   bool leave_one_out = false);

} // namespace bunching
