#pragma once

#include "bunching/config.hpp"
#include "bunching/sample.hpp"

#include <complex>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bunching {

//! Characteristic functions on the nonnegative half of a symmetric uniform
//! frequency grid; values at -xi are the complex conjugates.
struct CfEvaluation
{
  std::vector<double> xi;
  std::vector<std::complex<double>> numerator;   // bunched outcomes
  std::vector<std::complex<double>> denominator; // outcomes just above the bunch
  std::vector<double> regularizer;               // kernel4 transform at h4 * xi
  std::vector<double> quad_weights;              // trapezoid weights on [0, cutoff]
  double half_width = 0.0;                       // grid limit before the cutoff
  double cutoff = 0.0;                           // largest frequency used
  double h4 = 0.0;
  bool cutoff_from_data = false;
  double shift = 0.0; // outcomes were centered by this constant before transforming
};

struct SelectionDensity
{
  double value_at_zero = 0.0;
  double log_derivative_at_zero = 0.0;
  double imaginary_residual = 0.0;
  bool unstable = false;
  InversionMode mode = InversionMode::symmetric;
  int support_side = 0; // -1 or +1 for one-sided inversion, 0 otherwise
  double cutoff = 0.0;
  double h4 = 0.0;
  double excluded_fraction = 0.0;
  std::size_t grid_points = 0;
  std::vector<std::string> warnings;
};

//! Sample mean of exp(i xi v).
std::complex<double> ecf(std::span<const double> values, double xi);

//! Weighted ECF on xi_k = k * step for k < count.
std::vector<std::complex<double>> ecf_grid(std::span<const double> values,
                                           std::span<const double> weights,
                                           double step,
                                           std::size_t count);

//! Intercept at the bunching point of the complex local linear fit of
//! exp(i xi Y) on X over observations above the bunching point.
std::complex<double> boundary_cf(const Sample& sample, double xi, double h3, KernelKind kernel3);

//! Builds the frequency grid (choosing the cutoff from the data when h4 is
//! unset) and evaluates both characteristic functions on it.
CfEvaluation evaluate_cf(const Sample& sample, const EstimationConfig& config);

//! Same grid logic with the boundary outcome modeled as N(mu_plus, sigma2).
CfEvaluation evaluate_cf_normal(const Sample& sample,
                                double mu_plus,
                                double sigma2,
                                const EstimationConfig& config);

//! Inverts the ratio numerator / denominator at zero. For one-sided
//! inversion `support_side` is the sign of the selection term's support.
SelectionDensity invert_at_zero(const CfEvaluation& cf,
                                const EstimationConfig& config,
                                InversionMode mode,
                                int support_side = -1);

SelectionDensity selection_density(const Sample& sample,
                                   const EstimationConfig& config,
                                   InversionMode mode = InversionMode::symmetric,
                                   int support_side = -1);

//! Uses the normal boundary model, with the mean from the boundary regression.
SelectionDensity selection_density_normal_plugin(const Sample& sample,
                                                 double sigma2_boundary,
                                                 const EstimationConfig& config,
                                                 InversionMode mode = InversionMode::symmetric,
                                                 int support_side = -1);

//! Density and log-derivative at zero of N(mu0 - muP, var0 - varP).
SelectionDensity selection_density_closed_form(double mu0, double var0, double muP, double varP);

//! Columns xi, num_re, num_im, den_re, den_im.
void write_cf_csv(const CfEvaluation& cf, const std::filesystem::path& path);

} // namespace bunching
