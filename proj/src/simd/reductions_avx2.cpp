#include "backends.hpp"

#include <immintrin.h>

#include <algorithm>
#include <array>
#include <cmath>

namespace bunching::simd::detail {

namespace {

inline double hsum(__m256d v)
{
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Masked load of the last (n % 4) lanes; missing lanes read as zero.
inline __m256d load_tail(const double* p, std::size_t count)
{
  alignas(32) std::array<double, 4> buf{};
  std::copy(p, p + count, buf.begin());
  return _mm256_load_pd(buf.data());
}

} // namespace

WeightedSums weighted_sums_avx2(std::span<const double> w,
                                std::span<const double> u,
                                std::span<const double> y)
{
  const std::size_t n = w.size();
  __m256d sw = _mm256_setzero_pd(), swu = sw, swy = sw, sww = sw;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d wv = _mm256_loadu_pd(&w[i]);
    sw = _mm256_add_pd(sw, wv);
    swu = _mm256_fmadd_pd(wv, _mm256_loadu_pd(&u[i]), swu);
    swy = _mm256_fmadd_pd(wv, _mm256_loadu_pd(&y[i]), swy);
    sww = _mm256_fmadd_pd(wv, wv, sww);
  }
  if (i < n) {
    const std::size_t r = n - i;
    const __m256d wv = load_tail(&w[i], r);
    sw = _mm256_add_pd(sw, wv);
    swu = _mm256_fmadd_pd(wv, load_tail(&u[i], r), swu);
    swy = _mm256_fmadd_pd(wv, load_tail(&y[i], r), swy);
    sww = _mm256_fmadd_pd(wv, wv, sww);
  }
  return { hsum(sw), hsum(swu), hsum(swy), hsum(sww) };
}

CenteredSums centered_sums_avx2(std::span<const double> w,
                                std::span<const double> u,
                                std::span<const double> y,
                                double u_bar,
                                double y_bar)
{
  const std::size_t n = w.size();
  const __m256d ub = _mm256_set1_pd(u_bar);
  const __m256d yb = _mm256_set1_pd(y_bar);
  __m256d suu = _mm256_setzero_pd(), suy = suu;
  auto step = [&](__m256d wv, __m256d uv, __m256d yv) {
    const __m256d du = _mm256_sub_pd(uv, ub);
    const __m256d wdu = _mm256_mul_pd(wv, du);
    suu = _mm256_fmadd_pd(wdu, du, suu);
    suy = _mm256_fmadd_pd(wdu, _mm256_sub_pd(yv, yb), suy);
  };
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    step(_mm256_loadu_pd(&w[i]), _mm256_loadu_pd(&u[i]),
         _mm256_loadu_pd(&y[i]));
  if (i < n) {
    const std::size_t r = n - i;
    step(load_tail(&w[i], r), load_tail(&u[i], r), load_tail(&y[i], r));
  }
  return { hsum(suu), hsum(suy) };
}

void phase_sums_avx2(std::span<const double> v,
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

  // Block buffers are padded with zero weights, so the vector loop needs no
  // tail handling.
  alignas(32) std::array<double, phase_block> wa{}, wb{}, rr{}, ri{}, cr{}, ci{};

  for (std::size_t i0 = 0; i0 < n; i0 += phase_block) {
    const std::size_t m = std::min(phase_block, n - i0);
    const std::size_t mp = (m + 3) & ~std::size_t{ 3 };
    for (std::size_t j = 0; j < mp; ++j) {
      const bool live = j < m;
      const double vj = live ? v[i0 + j] : 0.0;
      wa[j] = live ? a[i0 + j] : 0.0;
      wb[j] = live && two ? b[i0 + j] : 0.0;
      rr[j] = std::cos(step * vj);
      ri[j] = std::sin(step * vj);
    }
    for (std::size_t k0 = 0; k0 < nk; k0 += phase_anchor) {
      const double xi0 = step * static_cast<double>(k0);
      for (std::size_t j = 0; j < mp; ++j) {
        const double vj = j < m ? v[i0 + j] : 0.0;
        cr[j] = std::cos(xi0 * vj);
        ci[j] = std::sin(xi0 * vj);
      }
      const std::size_t k1 = std::min(nk, k0 + phase_anchor);
      for (std::size_t k = k0; k < k1; ++k) {
        __m256d ar = _mm256_setzero_pd(), ai = ar, br = ar, bi = ar;
        for (std::size_t j = 0; j < mp; j += 4) {
          const __m256d c_re = _mm256_load_pd(&cr[j]);
          const __m256d c_im = _mm256_load_pd(&ci[j]);
          const __m256d wav = _mm256_load_pd(&wa[j]);
          ar = _mm256_fmadd_pd(wav, c_re, ar);
          ai = _mm256_fmadd_pd(wav, c_im, ai);
          if (two) {
            const __m256d wbv = _mm256_load_pd(&wb[j]);
            br = _mm256_fmadd_pd(wbv, c_re, br);
            bi = _mm256_fmadd_pd(wbv, c_im, bi);
          }
          const __m256d r_re = _mm256_load_pd(&rr[j]);
          const __m256d r_im = _mm256_load_pd(&ri[j]);
          _mm256_store_pd(
            &cr[j], _mm256_fmsub_pd(c_re, r_re, _mm256_mul_pd(c_im, r_im)));
          _mm256_store_pd(
            &ci[j], _mm256_fmadd_pd(c_re, r_im, _mm256_mul_pd(c_im, r_re)));
        }
        out_a[k] += std::complex<double>(hsum(ar), hsum(ai));
        if (two)
          out_b[k] += std::complex<double>(hsum(br), hsum(bi));
      }
    }
  }
}

} // namespace bunching::simd::detail
