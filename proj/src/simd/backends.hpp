#pragma once

#include "bunching/simd/reductions.hpp"

#include <cstddef>

namespace bunching::simd::detail {

// Samples are processed in blocks small enough to stay in L1 while the
// frequency loop runs over them.
inline constexpr std::size_t phase_block = 256;
// Exact cos/sin are recomputed every this many frequency steps to stop the
// rotation recurrence from drifting.
inline constexpr std::size_t phase_anchor = 32;

WeightedSums weighted_sums_scalar(std::span<const double> w,
                                  std::span<const double> u,
                                  std::span<const double> y);
CenteredSums centered_sums_scalar(std::span<const double> w,
                                  std::span<const double> u,
                                  std::span<const double> y,
                                  double u_bar,
                                  double y_bar);
void phase_sums_scalar(std::span<const double> v,
                       std::span<const double> a,
                       std::span<const double> b,
                       double step,
                       std::span<std::complex<double>> out_a,
                       std::span<std::complex<double>> out_b);

#if defined(BUNCHING_HAVE_AVX2)
WeightedSums weighted_sums_avx2(std::span<const double> w,
                                std::span<const double> u,
                                std::span<const double> y);
CenteredSums centered_sums_avx2(std::span<const double> w,
                                std::span<const double> u,
                                std::span<const double> y,
                                double u_bar,
                                double y_bar);
void phase_sums_avx2(std::span<const double> v,
                     std::span<const double> a,
                     std::span<const double> b,
                     double step,
                     std::span<std::complex<double>> out_a,
                     std::span<std::complex<double>> out_b);
#endif

} // namespace bunching::simd::detail
