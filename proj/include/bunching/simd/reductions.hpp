#pragma once

#include <complex>
#include <span>

namespace bunching::simd {

//! Weighted sums used by the local linear solvers.
struct WeightedSums
{
  double w = 0.0;   // sum w
  double wu = 0.0;  // sum w u
  double wy = 0.0;  // sum w y
  double ww = 0.0;  // sum w^2
};

struct CenteredSums
{
  double uu = 0.0; // sum w (u - u_bar)^2
  double uy = 0.0; // sum w (u - u_bar)(y - y_bar)
};

WeightedSums weighted_sums(std::span<const double> w,
                           std::span<const double> u,
                           std::span<const double> y);

CenteredSums centered_sums(std::span<const double> w,
                           std::span<const double> u,
                           std::span<const double> y,
                           double u_bar,
                           double y_bar);

//! Phase sums on the uniform frequency grid xi_k = k * step, k < out.size():
//!   out_a[k] = sum_i a_i exp(i xi_k v_i),  out_b[k] = sum_i b_i exp(i xi_k v_i).
//! `b` may be empty, in which case `out_b` is ignored.
void phase_sums(std::span<const double> v,
                std::span<const double> a,
                std::span<const double> b,
                double step,
                std::span<std::complex<double>> out_a,
                std::span<std::complex<double>> out_b);

} // namespace bunching::simd
