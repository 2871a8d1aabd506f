#include "bunching/simd/dispatch.hpp"
#include "bunching/simd/reductions.hpp"

#include "backends.hpp"
#include "bunching/error.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace bunching::simd {

namespace {

constexpr int unresolved = -1;
std::atomic<int> forced{ unresolved };
std::atomic<int> detected{ unresolved };

bool cpu_has_avx2()
{
#if defined(BUNCHING_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect()
{
  if (const char* env = std::getenv("BUNCHING_SIMD")) {
    const std::string choice(env);
    if (choice == "scalar")
      return Backend::scalar;
    if (choice == "avx2" && cpu_has_avx2())
      return Backend::avx2;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

} // namespace

std::string_view to_string(Backend backend)
{
  return backend == Backend::avx2 ? "avx2" : "scalar";
}

bool backend_available(Backend backend)
{
  return backend == Backend::scalar || cpu_has_avx2();
}

Backend active_backend()
{
  int f = forced.load(std::memory_order_relaxed);
  if (f != unresolved)
    return static_cast<Backend>(f);
  int d = detected.load(std::memory_order_relaxed);
  if (d == unresolved) {
    d = static_cast<int>(detect());
    detected.store(d, std::memory_order_relaxed);
  }
  return static_cast<Backend>(d);
}

void set_backend(Backend backend)
{
  if (!backend_available(backend))
    fail(ErrorKind::input, "simd_unavailable",
         "SIMD backend '" + std::string(to_string(backend)) +
           "' is not available on this machine");
  forced.store(static_cast<int>(backend), std::memory_order_relaxed);
}

void reset_backend()
{
  forced.store(unresolved, std::memory_order_relaxed);
  detected.store(unresolved, std::memory_order_relaxed);
}

WeightedSums weighted_sums(std::span<const double> w,
                           std::span<const double> u,
                           std::span<const double> y)
{
#if defined(BUNCHING_HAVE_AVX2)
  if (active_backend() == Backend::avx2)
    return detail::weighted_sums_avx2(w, u, y);
#endif
  return detail::weighted_sums_scalar(w, u, y);
}

CenteredSums centered_sums(std::span<const double> w,
                           std::span<const double> u,
                           std::span<const double> y,
                           double u_bar,
                           double y_bar)
{
#if defined(BUNCHING_HAVE_AVX2)
  if (active_backend() == Backend::avx2)
    return detail::centered_sums_avx2(w, u, y, u_bar, y_bar);
#endif
  return detail::centered_sums_scalar(w, u, y, u_bar, y_bar);
}

void phase_sums(std::span<const double> v,
                std::span<const double> a,
                std::span<const double> b,
                double step,
                std::span<std::complex<double>> out_a,
                std::span<std::complex<double>> out_b)
{
  if (a.size() != v.size() || (!b.empty() && b.size() != v.size()) ||
      (!b.empty() && out_b.size() != out_a.size()))
    fail(ErrorKind::input, "length_mismatch", "phase_sums: length mismatch");
#if defined(BUNCHING_HAVE_AVX2)
  if (active_backend() == Backend::avx2)
    return detail::phase_sums_avx2(v, a, b, step, out_a, out_b);
#endif
  detail::phase_sums_scalar(v, a, b, step, out_a, out_b);
}

} // namespace bunching::simd
