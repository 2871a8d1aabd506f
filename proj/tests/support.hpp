#pragma once

#include "bunching/sample.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace testing {

using bunching::Sample;

inline double normal_pdf(double x, double mean = 0.0, double sd = 1.0)
{
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
}

inline double normal_cdf(double x)
{
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

//! Adaptive Gauss-Kronrod integral, used as an independent quadrature oracle.
inline double integrate(const std::function<double(double)>& f, double a, double b)
{
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-14);
}

//! Weighted least squares of y on (1, x - x0) by the raw 2x2 normal equations.
struct Wls
{
  double intercept = 0.0;
  double slope = 0.0;
};

inline Wls dense_wls(const std::vector<double>& x,
                     const std::vector<double>& y,
                     const std::vector<double>& w,
                     double x0)
{
  double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = x[i] - x0;
    s0 += w[i];
    s1 += w[i] * u;
    s2 += w[i] * u * u;
    t0 += w[i] * y[i];
    t1 += w[i] * u * y[i];
  }
  const double det = s0 * s2 - s1 * s1;
  return { (s2 * t0 - s1 * t1) / det, (s0 * t1 - s1 * t0) / det };
}

//! Bunched rows at 0 with Y ~ N(mu0, var0) and rows with X ~ Uniform(0, 1)
//! and Y ~ N(muP, varP) independent of X.
inline Sample normal_normal_sample(double mu0,
                                   double var0,
                                   double muP,
                                   double varP,
                                   std::size_t n_side,
                                   std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x, y;
  x.reserve(2 * n_side);
  y.reserve(2 * n_side);
  for (std::size_t i = 0; i < n_side; ++i) {
    x.push_back(0.0);
    y.push_back(mu0 + std::sqrt(var0) * g(rng));
  }
  for (std::size_t i = 0; i < n_side; ++i) {
    double v = u(rng);
    while (v == 0.0)
      v = u(rng);
    x.push_back(v);
    y.push_back(muP + std::sqrt(varP) * g(rng));
  }
  return Sample(std::move(x), std::move(y), 0.0);
}

//! Scratch directory removed at scope exit.
class TempDir
{
public:
  TempDir()
  {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("bunching_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text)
{
  std::ofstream(p) << text;
}

inline std::string read_file(const std::filesystem::path& p)
{
  std::ifstream in(p);
  return { std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>() };
}

} // namespace testing
