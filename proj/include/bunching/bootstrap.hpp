#pragma once

#include "bunching/estimates.hpp"
#include "bunching/sample.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace bunching {

//! Statistic computed on a resample; may throw bunching::Error to mark the
//! replicate as failed.
using BootstrapTarget = std::function<std::vector<double>(const Sample&)>;

struct BootstrapResult
{
  int requested = 0;
  int failed = 0;
  //! Successful replicates in replicate-index order; one row per replicate.
  std::vector<std::vector<double>> replicates;
  std::vector<double> se;    // per statistic, n - 1 divisor
  std::vector<Interval> ci;  // 2.5% and 97.5% percentiles
};

//! Seed of replicate `index`, independent of how replicates are scheduled.
std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t index);

//! Row indices of one pairs-bootstrap resample.
std::vector<std::size_t> resample_rows(std::size_t n, std::uint64_t seed);

//! Pairs bootstrap. Throws an unreliable error when more than 10% of the
//! replicates fail.
BootstrapResult bootstrap(const Sample& sample,
                          const BootstrapTarget& target,
                          int replications,
                          std::uint64_t seed,
                          int threads = 0);

//! Runs body(i) for i < count on up to `threads` workers (0 = all cores).
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

} // namespace bunching
