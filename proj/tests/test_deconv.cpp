#include "bunching/deconv.hpp"
#include "bunching/error.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace bunching;

namespace {

std::string error_code(const std::function<void()>& f)
{
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

} // namespace

TEST_CASE("empirical characteristic function")
{
  const std::vector<double> v{ 1.0, -1.0, 3.0 };
  CHECK(ecf(v, 0.0) == std::complex<double>(1.0, 0.0));
  const std::vector<double> pm{ 1.0, -1.0 };
  const auto z = ecf(pm, M_PI);
  CHECK(z.real() == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(std::abs(z.imag()) < 1e-15);
  CHECK_THROWS_AS(ecf(std::vector<double>{}, 1.0), Error);
}

TEST_CASE("ECF of a normal sample tracks the normal characteristic function")
{
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.7, 1.3);
  std::vector<double> v(1000000);
  for (auto& x : v)
    x = g(rng);
  const auto grid = ecf_grid(v, {}, 0.01, 400);
  double sup = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double xi = 0.01 * static_cast<double>(k);
    const auto truth = std::polar(std::exp(-0.5 * 1.69 * xi * xi), 0.7 * xi);
    sup = std::max(sup, std::abs(grid[k] - truth));
    CHECK(std::abs(grid[k]) <= 1.0 + 1e-12);
  }
  CHECK(sup < 0.01);
}

TEST_CASE("boundary characteristic function")
{
  std::vector<double> x{ 0.0, 0.0 }, y{ 5.0, -5.0 };
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    x.push_back(u(rng) + 1e-9);
    y.push_back(2.5);
  }
  const Sample s(x, y, 0.0);
  const auto one = boundary_cf(s, 0.0, 0.5, KernelKind::triangular);
  CHECK(one.real() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(one.imag()) < 1e-14);
  const auto c = boundary_cf(s, 1.7, 0.5, KernelKind::triangular);
  CHECK(std::abs(c - std::polar(1.0, 1.7 * 2.5)) < 1e-12);
}

TEST_CASE("boundary characteristic function of a normal regression")
{
  // Y | X = x ~ N(a + b x, s^2) has boundary cf exp(i a xi - s^2 xi^2 / 2).
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  std::vector<double> x{ 0.0 }, y{ 0.0 };
  for (int i = 0; i < 400000; ++i) {
    const double v = u(rng) + 1e-12;
    x.push_back(v);
    y.push_back(0.5 + 1.5 * v + 0.8 * g(rng));
  }
  const Sample s(x, y, 0.0);
  for (double xi : { 0.5, 1.0, 2.0 }) {
    const auto est = boundary_cf(s, xi, 0.2, KernelKind::triangular);
    const auto truth = std::polar(std::exp(-0.32 * xi * xi), 0.5 * xi);
    CHECK(std::abs(est - truth) < 0.02);
  }
}

TEST_CASE("selection density on normal-normal data")
{
  const auto same_var = testing::normal_normal_sample(0.0, 2.0, 0.0, 1.0, 100000, 4);
  EstimationConfig c;
  c.h3 = 0.5;
  const auto a = selection_density(same_var, c);
  CHECK(a.value_at_zero == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(0.02));
  CHECK(a.imaginary_residual < 1e-10);
  CHECK(a.excluded_fraction == 0.0);

  const auto shifted = testing::normal_normal_sample(-1.0, 2.0, 0.0, 1.0, 100000, 5);
  const auto b = selection_density(shifted, c);
  CHECK(b.value_at_zero == doctest::Approx(testing::normal_pdf(1.0)).epsilon(0.05));
  // f'(0)/f(0) = mu / sigma^2 for N(mu, sigma^2); here mu = -1, sigma^2 = 1.
  CHECK(std::abs(b.log_derivative_at_zero - (-1.0)) < 0.1);

  const auto cf = selection_density_closed_form(-1.0, 2.0, 0.0, 1.0);
  CHECK(std::abs(b.value_at_zero - cf.value_at_zero) < 0.05 * cf.value_at_zero);
}

TEST_CASE("identical bunched and boundary outcomes are a point mass")
{
  const auto s = testing::normal_normal_sample(0.0, 1.0, 0.0, 1.0, 50000, 6);
  EstimationConfig c;
  c.h3 = 0.5;
  CHECK(error_code([&] { selection_density(s, c); }) == "no_selection");
}

TEST_CASE("normal plug-in")
{
  EstimationConfig c;
  c.h1 = c.h3 = 0.5;
  const auto s = testing::normal_normal_sample(-1.0, 2.0, 0.0, 1.0, 100000, 7);
  const auto p = selection_density_normal_plugin(s, 1.0, c);
  CHECK(p.value_at_zero == doctest::Approx(testing::normal_pdf(1.0)).epsilon(0.05));
  CHECK_THROWS_AS(selection_density_normal_plugin(s, 0.0, c), Error);
}

TEST_CASE("normal plug-in is less dispersed than the nonparametric estimate")
{
  EstimationConfig c;
  c.h1 = c.h3 = 0.5;
  c.quadrature.nodes = 256;
  c.h4 = 0.5; // same regularization for both estimators
  std::vector<double> np, pl;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const auto s = testing::normal_normal_sample(0.0, 2.0, 0.0, 1.0, 5000, 100 + r);
    np.push_back(selection_density(s, c).value_at_zero);
    pl.push_back(selection_density_normal_plugin(s, 1.0, c).value_at_zero);
  }
  auto sd = [](const std::vector<double>& v) {
    double m = 0, q = 0;
    for (double x : v)
      m += x / v.size();
    for (double x : v)
      q += (x - m) * (x - m) / (v.size() - 1);
    return std::sqrt(q);
  };
  double mean_pl = 0;
  for (double v : pl)
    mean_pl += v / pl.size();
  CHECK(mean_pl == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(0.04));
  CHECK(sd(pl) < sd(np));
}

TEST_CASE("vanishing boundary variance reduces the plug-in to a band-limited KDE")
{
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.3, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x, y, bunched;
  for (int i = 0; i < 5000; ++i) {
    x.push_back(0.0);
    y.push_back(g(rng));
    bunched.push_back(y.back());
    x.push_back(u(rng) + 1e-9);
    y.push_back(0.1 * x.back());
  }
  const Sample s(x, y, 0.0);
  EstimationConfig c;
  c.h1 = 0.5;
  c.h4 = 0.5;
  c.quadrature.half_width = 2.0;
  c.quadrature.nodes = 8192;
  const double mu_plus = 0.0; // boundary intercept of y = 0.1 x
  const auto p = selection_density_normal_plugin(s, 1e-14, c);
  // Sinc-kernel density estimate of the bunched outcomes at mu_plus with cutoff 2.
  double kde = 0.0;
  for (double v : bunched) {
    const double d = v - mu_plus;
    kde += d == 0.0 ? 2.0 / M_PI : std::sin(2.0 * d) / (M_PI * d);
  }
  kde /= static_cast<double>(bunched.size());
  CHECK(p.value_at_zero == doctest::Approx(kde).epsilon(1e-4));
}

TEST_CASE("closed form")
{
  const auto a = selection_density_closed_form(0, 2, 0, 1);
  CHECK(a.value_at_zero == doctest::Approx(0.3989422804014327).epsilon(1e-14));
  CHECK(a.log_derivative_at_zero == 0.0);
  const auto b = selection_density_closed_form(-1, 2, 0, 1);
  CHECK(b.value_at_zero == doctest::Approx(0.24197072451914337).epsilon(1e-14));
  CHECK(b.log_derivative_at_zero == doctest::Approx(-1.0));
  CHECK(error_code([] { selection_density_closed_form(0, 1, 0, 1); }) == "nonpositive_selection_variance");
}

TEST_CASE("shifting every outcome leaves the selection density unchanged")
{
  const auto s = testing::normal_normal_sample(-1.0, 2.0, 0.0, 1.0, 20000, 9);
  std::vector<double> y = s.outcome();
  for (auto& v : y)
    v += 1234.5;
  EstimationConfig c;
  c.h3 = 0.5;
  c.quadrature.nodes = 512;
  const auto a = selection_density(s, c);
  const auto b = selection_density(s.with_outcome(y), c);
  CHECK(b.value_at_zero == doctest::Approx(a.value_at_zero).epsilon(1e-8));
  CHECK(b.log_derivative_at_zero == doctest::Approx(a.log_derivative_at_zero).epsilon(1e-7));
}

TEST_CASE("scaling outcomes rescales the density and its log-derivative")
{
  const auto s = testing::normal_normal_sample(-1.0, 2.0, 0.0, 1.0, 20000, 10);
  EstimationConfig c;
  c.h3 = 0.5;
  c.h4 = 0.45;
  c.quadrature.half_width = 3.0;
  c.quadrature.nodes = 512;
  const double k = 7.0;
  std::vector<double> y = s.outcome();
  for (auto& v : y)
    v *= k;
  EstimationConfig ck = c;
  ck.h4 = *c.h4 * k;
  ck.quadrature.half_width = *c.quadrature.half_width / k;
  const auto a = selection_density(s, c);
  const auto b = selection_density(s.with_outcome(y), ck);
  CHECK(b.value_at_zero == doctest::Approx(a.value_at_zero / k).epsilon(1e-9));
  CHECK(b.log_derivative_at_zero == doctest::Approx(a.log_derivative_at_zero / k).epsilon(1e-8));
  CHECK(a.value_at_zero == doctest::Approx(testing::normal_pdf(1.0)).epsilon(0.1));
}

TEST_CASE("denominator floor and excluded mass")
{
  const auto s = testing::normal_normal_sample(-1.0, 2.0, 0.0, 1.0, 5000, 11);
  EstimationConfig c;
  c.h3 = 0.5;
  c.h1 = 0.5;
  c.h4 = 0.05;
  c.quadrature.half_width = 20.0;
  // exp(-xi^2 / 2) drops below the floor past xi = 3.7, far inside the cutoff.
  CHECK(error_code([&] { selection_density_normal_plugin(s, 1.0, c); }) == "unstable_inversion");
  c.h4 = 1.0 / 3.5;
  const auto ok = selection_density_normal_plugin(s, 1.0, c);
  CHECK(ok.excluded_fraction == 0.0);
}

TEST_CASE("characteristic function CSV")
{
  testing::TempDir dir;
  const auto s = testing::normal_normal_sample(-1.0, 2.0, 0.0, 1.0, 2000, 12);
  EstimationConfig c;
  c.h3 = 0.5;
  c.quadrature.nodes = 32;
  const auto cf = evaluate_cf(s, c);
  CHECK(cf.numerator[0] == std::complex<double>(1.0, 0.0));
  CHECK(cf.denominator[0] == std::complex<double>(1.0, 0.0));
  write_cf_csv(cf, dir / "cf.csv");
  const auto text = testing::read_file(dir / "cf.csv");
  CHECK(text.rfind("xi,num_re,num_im,den_re,den_im\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 17);
}
