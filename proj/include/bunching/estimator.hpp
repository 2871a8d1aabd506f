#pragma once

#include "bunching/config.hpp"
#include "bunching/estimates.hpp"
#include "bunching/sample.hpp"

#include <span>
#include <vector>

namespace bunching {

//! Sign of the outcome discontinuity at the bunching point.
ThetaResult theta(const Sample& sample, const EstimationConfig& config);

//! Point estimate of the average marginal effect (no bootstrap).
AmeEstimate ame(const Sample& sample, const EstimationConfig& config);

//! ATT at x from already computed boundary components.
AttEstimate att_from_components(const AmeEstimate& components,
                                const Sample& sample,
                                double x,
                                int degree,
                                const EstimationConfig& config);

AttEstimate att(const Sample& sample, double x, int degree, const EstimationConfig& config);

//! ATT on a grid, sorted by x, sharing one set of boundary components.
std::vector<AttEstimate> att_curve(const Sample& sample,
                                   std::span<const double> xs,
                                   int degree,
                                   const EstimationConfig& config);

//! Point estimate plus bootstrap SE and percentile interval when
//! config.bootstrap.replications > 0.
AmeEstimate ame_with_inference(const Sample& sample, const EstimationConfig& config);

std::vector<AttEstimate> att_curve_with_inference(const Sample& sample,
                                                  std::span<const double> xs,
                                                  int degree,
                                                  const EstimationConfig& config);

} // namespace bunching
