#include "bunching/diagnostics.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace bunching;

namespace {

// Integer treatment levels 0..3 with normal outcomes around 3000 - 20 x.
Sample levels_sample(std::size_t per_level, std::size_t sparse_level_count, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 450.0);
  std::vector<double> x, y;
  for (int level = 0; level < 4; ++level)
    for (std::size_t i = 0; i < per_level; ++i) {
      x.push_back(level);
      y.push_back(3000.0 - 20.0 * level + g(rng));
    }
  for (std::size_t i = 0; i < sparse_level_count; ++i) {
    x.push_back(9.2);
    y.push_back(2800.0 + g(rng));
  }
  return Sample(x, y, 0.0);
}

} // namespace

TEST_CASE("conditional means with normal intervals")
{
  const auto s = levels_sample(5000, 3, 51);
  const auto d = diagnostics(s);
  REQUIRE(d.conditional_mean.size() == 5);
  CHECK(d.conditional_mean[4].x == 9.0);
  CHECK(d.conditional_mean[4].count == 3);
  for (int level = 0; level < 4; ++level) {
    const auto& r = d.conditional_mean[level];
    CHECK(r.x == level);
    CHECK(r.count == 5000);
    CHECK(std::abs(r.mean_y - (3000.0 - 20.0 * level)) < 4.0 * 450.0 / std::sqrt(5000.0));
    const double half = 1.96 * 450.0 / std::sqrt(5000.0);
    CHECK(r.ci_hi - r.mean_y == doctest::Approx(r.mean_y - r.ci_lo).epsilon(1e-9));
    CHECK(r.ci_hi - r.mean_y == doctest::Approx(half).epsilon(0.05));
  }
}

TEST_CASE("sparse levels get no KDE or QQ curve, with a warning")
{
  const auto d = diagnostics(levels_sample(200, 3, 52));
  CHECK(d.conditional_mean.size() == 5);
  CHECK(d.qq.size() == 4);
  CHECK(d.kde.size() == 4);
  REQUIRE(d.warnings.size() == 1);
  CHECK(d.warnings[0].find("9") != std::string::npos);
  DiagnosticsOptions lax;
  lax.min_level_count = 3;
  CHECK(diagnostics(levels_sample(200, 3, 52), lax).kde.size() == 5);
}

TEST_CASE("each KDE integrates to one")
{
  const auto d = diagnostics(levels_sample(3000, 0, 53));
  for (const auto& k : d.kde) {
    CHECK(k.grid_y.size() == k.density.size());
    CHECK(trapezoid(k.grid_y, k.density) == doctest::Approx(1.0).epsilon(0.01));
    for (double v : k.density)
      CHECK(v >= 0.0);
  }
  DiagnosticsOptions narrow;
  narrow.kde_bandwidth = 10.0;
  for (const auto& k : diagnostics(levels_sample(500, 0, 54), narrow).kde)
    CHECK(trapezoid(k.grid_y, k.density) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("QQ pairs of normal levels hug the diagonal")
{
  const auto d = diagnostics(levels_sample(20000, 0, 55));
  for (const auto& q : d.qq) {
    REQUIRE(q.normal_quantile.size() == 200);
    double worst = 0.0;
    for (std::size_t i = 0; i < q.normal_quantile.size(); ++i) {
      // Skip the extreme tails, where sampling error is largest.
      if (std::abs(q.normal_quantile[i]) > 2.5)
        continue;
      worst = std::max(worst, std::abs(q.sample_quantile[i] - q.normal_quantile[i]));
    }
    CHECK(worst < 0.1);
    CHECK(std::is_sorted(q.sample_quantile.begin(), q.sample_quantile.end()));
  }
}

TEST_CASE("trapezoid rule")
{
  CHECK(trapezoid({ 0.0, 1.0, 3.0 }, { 1.0, 1.0, 1.0 }) == 3.0);
  CHECK(trapezoid({ 0.0, 2.0 }, { 0.0, 2.0 }) == 2.0);
}

TEST_CASE("diagnostic CSV files")
{
  testing::TempDir dir;
  const auto d = diagnostics(levels_sample(100, 0, 56));
  write_conditional_mean_csv(d, dir / "m.csv");
  write_kde_csv(d, dir / "k.csv");
  write_qq_csv(d, dir / "q.csv");
  const auto m = testing::read_file(dir / "m.csv");
  CHECK(m.rfind("x,mean_y,ci_lo,ci_hi,count\n", 0) == 0);
  CHECK(std::count(m.begin(), m.end(), '\n') == 5);
  CHECK(testing::read_file(dir / "k.csv").rfind("level,grid_y,density\n", 0) == 0);
  CHECK(testing::read_file(dir / "q.csv").rfind("level,normal_quantile,sample_quantile\n", 0) == 0);
}
