#pragma once

#include "bunching/config.hpp"
#include "bunching/estimates.hpp"
#include "bunching/sample.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bunching {

//! Observation-to-stratum map with weights P(stratum | bunched).
struct StrataAssignment
{
  std::vector<std::int64_t> labels;
  std::map<std::int64_t, double> weights;
  //! Strata with positive weight, ascending.
  std::vector<std::int64_t> kept;
};

//! Weights are computed from bunched observations only.
StrataAssignment assign_strata(const Sample& sample, std::vector<std::int64_t> labels);

//! Strata from a discrete control column (values rounded to integers).
StrataAssignment strata_from_control(const Sample& sample, std::string_view column);

struct StratumResult
{
  std::int64_t label = 0;
  double weight = 0.0;
  std::optional<AmeEstimate> estimate;
  std::string skipped; // reason when no estimate
};

struct StratifiedAme
{
  //! sum of weight * stratum ame over estimable strata, divided by their
  //! total weight.
  double ame = 0.0;
  double kept_weight = 0.0;
  std::vector<StratumResult> strata;
};

//! Throws a degenerate error when no stratum with positive weight is estimable.
StratifiedAme stratified_ame(const Sample& sample,
                             const StrataAssignment& strata,
                             const EstimationConfig& config);

//! Product-kernel weights around z0 over continuous control columns
//! (all continuous columns when `columns` is empty), normalized to sum 1.
std::vector<double> control_weights(const Sample& sample,
                                    const std::vector<std::string>& columns,
                                    const std::vector<double>& z0,
                                    const std::vector<double>& bandwidths,
                                    const std::vector<KernelKind>& kernels);

AmeEstimate kernel_weighted_ame(const Sample& sample,
                                const std::vector<std::string>& columns,
                                const std::vector<double>& z0,
                                const std::vector<double>& bandwidths,
                                const std::vector<KernelKind>& kernels,
                                const EstimationConfig& config);

//! k-means on standardized continuous columns and scaled one-hot discrete
//! columns (all controls when `columns` is empty).
StrataAssignment cluster_controls(const Sample& sample,
                                  int clusters,
                                  std::uint64_t seed,
                                  const std::vector<std::string>& columns = {});

} // namespace bunching
