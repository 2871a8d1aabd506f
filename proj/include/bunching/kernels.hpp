#pragma once

#include <complex>
#include <optional>
#include <string>
#include <string_view>

namespace bunching {

enum class KernelKind
{
  triangular,
  epanechnikov,
  uniform,
  gaussian,
  sinc_flat
};

//! Half-width of the support in scaled units; infinite for gaussian and sinc.
double kernel_support(KernelKind kind);

//! True when the kernel vanishes outside [-1, 1].
bool kernel_is_compact(KernelKind kind);

double kernel_eval(KernelKind kind, double u);

//! Fourier transform \int k(v) e^{itv} dv; real for every supported kernel.
std::complex<double> kernel_ft(KernelKind kind, double t);

//! \int_0^1 k(v) e^{tv} dv for compact nonnegative kernels, stable near t = 0.
double one_sided_exp_moment(KernelKind kind, double t);

std::string_view to_string(KernelKind kind);
std::optional<KernelKind> parse_kernel(std::string_view name);
KernelKind kernel_from_string(std::string_view name); // throws input error

} // namespace bunching
