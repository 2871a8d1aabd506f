#pragma once

#include "bunching/deconv.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bunching {

struct Interval
{
  double lo = 0.0;
  double hi = 0.0;
};

struct ThetaResult
{
  double gap = 0.0; // boundary intercept minus bunched mean
  int theta = 0;
  double tolerance_used = 0.0;
  double boundary_mean = 0.0;
  double bunched_mean = 0.0;
  std::optional<double> gap_se; // set by the bootstrap tolerance rule
};

//! Average marginal effect at the bunching point with every component.
//! When theta != 0, ame == m_slope - s_prime and
//! s_prime == theta * (f_x_boundary / bunch_mass) / selection_density_at_zero.
struct AmeEstimate
{
  double ame = 0.0;
  double m_slope = 0.0;
  int theta = 0;
  double gap = 0.0;
  double theta_tolerance = 0.0;
  double boundary_mean = 0.0;
  double bunched_mean = 0.0;
  double f_x_boundary = 0.0;
  double f_x_log_slope = 0.0;
  double bunch_mass = 0.0;
  std::optional<double> selection_density_at_zero;
  std::optional<double> selection_log_derivative;
  std::optional<SelectionDensity> selection;
  std::optional<double> boundary_variance; // normal plug-in only
  double s_prime = 0.0;

  double h1 = 0.0;
  double h2 = 0.0;
  double h3 = 0.0;
  double h_mean = 0.0;

  std::optional<double> se;
  std::optional<Interval> ci;
  int bootstrap_replications = 0;
  int bootstrap_failed = 0;
  std::vector<std::string> warnings;
};

struct AttEstimate
{
  double x = 0.0;
  int degree = 1;
  double att = 0.0;
  double m_at_x = 0.0;
  //! First- and (for degree 2) second-order selection corrections.
  std::vector<double> correction_terms;
  std::optional<double> se;
  std::optional<Interval> ci;
};

} // namespace bunching
