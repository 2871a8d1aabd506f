#include "backends.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace bunching::simd::detail {

WeightedSums weighted_sums_scalar(std::span<const double> w,
                                  std::span<const double> u,
                                  std::span<const double> y)
{
  WeightedSums s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    s.w += w[i];
    s.wu += w[i] * u[i];
    s.wy += w[i] * y[i];
    s.ww += w[i] * w[i];
  }
  return s;
}

CenteredSums centered_sums_scalar(std::span<const double> w,
                                  std::span<const double> u,
                                  std::span<const double> y,
                                  double u_bar,
                                  double y_bar)
{
  CenteredSums s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double du = u[i] - u_bar;
    s.uu += w[i] * du * du;
    s.uy += w[i] * du * (y[i] - y_bar);
  }
  return s;
}

void phase_sums_scalar(std::span<const double> v,
                       std::span<const double> a,
                       std::span<const double> b,
                       double step,
                       std::span<std::complex<double>> out_a,
                       std::span<std::complex<double>> out_b)
{
  const std::size_t n = v.size();
  const std::size_t nk = out_a.size();
  const bool two = !b.empty();
  std::fill(out_a.begin(), out_a.end(), std::complex<double>{});
  if (two)
    std::fill(out_b.begin(), out_b.end(), std::complex<double>{});

  std::vector<double> rot_re(phase_block), rot_im(phase_block);
  std::vector<double> cur_re(phase_block), cur_im(phase_block);

  for (std::size_t i0 = 0; i0 < n; i0 += phase_block) {
    const std::size_t m = std::min(phase_block, n - i0);
    for (std::size_t j = 0; j < m; ++j) {
      rot_re[j] = std::cos(step * v[i0 + j]);
      rot_im[j] = std::sin(step * v[i0 + j]);
    }
    for (std::size_t k0 = 0; k0 < nk; k0 += phase_anchor) {
      const double xi0 = step * static_cast<double>(k0);
      for (std::size_t j = 0; j < m; ++j) {
        cur_re[j] = std::cos(xi0 * v[i0 + j]);
        cur_im[j] = std::sin(xi0 * v[i0 + j]);
      }
      const std::size_t k1 = std::min(nk, k0 + phase_anchor);
      for (std::size_t k = k0; k < k1; ++k) {
        double ar = 0.0, ai = 0.0, br = 0.0, bi = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          const double cr = cur_re[j], ci = cur_im[j];
          ar += a[i0 + j] * cr;
          ai += a[i0 + j] * ci;
          if (two) {
            br += b[i0 + j] * cr;
            bi += b[i0 + j] * ci;
          }
          cur_re[j] = cr * rot_re[j] - ci * rot_im[j];
          cur_im[j] = cr * rot_im[j] + ci * rot_re[j];
        }
        out_a[k] += std::complex<double>(ar, ai);
        if (two)
          out_b[k] += std::complex<double>(br, bi);
      }
    }
  }
}

} // namespace bunching::simd::detail
