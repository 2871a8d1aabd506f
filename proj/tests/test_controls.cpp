#include "bunching/controls.hpp"
#include "bunching/error.hpp"
#include "bunching/estimator.hpp"
#include "bunching/simulate.hpp"

#include <doctest.h>

#include <numeric>
#include <random>

using namespace bunching;

namespace {

DgpSpec linear_selection_dgp()
{
  DgpSpec spec;
  spec.xstar = XStarLaw::normal(-1.0, 1.0);
  spec.selection = SelectionSpec::both(OffsetFunction::polynomial({ 2.0 }));
  spec.att = OffsetFunction::polynomial({ -1.0 });
  return spec;
}

EstimationConfig bandwidths(double h)
{
  EstimationConfig c;
  c.h1 = c.h2 = c.h3 = h;
  return c;
}

Sample with_control(const Sample& s, ControlColumn column)
{
  return Sample(s.treatment(), s.outcome(), s.bunch_point(), { std::move(column) });
}

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

TEST_CASE("a single stratum reproduces the unconditional estimate exactly")
{
  const auto s = sample_dgp(linear_selection_dgp(), 100000, 21).sample;
  const auto c = bandwidths(0.6);
  const auto strata = assign_strata(s, std::vector<std::int64_t>(s.size(), 7));
  CHECK(strata.kept == std::vector<std::int64_t>{ 7 });
  CHECK(strata.weights.at(7) == 1.0);
  const auto st = stratified_ame(s, strata, c);
  CHECK(st.ame == ame(s, c).ame);
  CHECK(st.kept_weight == 1.0);
}

TEST_CASE("strata weights come from bunched observations only")
{
  // Labels: bunched rows split 3:1 between strata 0 and 1; stratum 2 only above.
  std::vector<double> x, y;
  std::vector<std::int64_t> labels;
  for (int i = 0; i < 8; ++i) {
    x.push_back(0.0);
    y.push_back(0.0);
    labels.push_back(i < 6 ? 0 : 1);
  }
  for (int i = 0; i < 30; ++i) {
    x.push_back(0.1 + 0.01 * i);
    y.push_back(1.0);
    labels.push_back(i % 3);
  }
  const Sample s(x, y, 0.0);
  const auto a = assign_strata(s, labels);
  CHECK(a.weights.at(0) == 0.75);
  CHECK(a.weights.at(1) == 0.25);
  CHECK(a.weights.at(2) == 0.0);
  CHECK(a.kept == std::vector<std::int64_t>{ 0, 1 });
  CHECK(error_code([&] { assign_strata(s, { 0, 1 }); }) == "length_mismatch");
}

TEST_CASE("stratum with no bunched mass is skipped and the rest renormalized")
{
  auto spec = linear_selection_dgp();
  auto s = sample_dgp(spec, 200000, 22).sample;
  std::vector<std::int64_t> labels(s.size(), 0);
  std::mt19937_64 rng(1);
  // Half of the above-bunch rows move to a stratum with no bunched mass.
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.is_above(i) && (rng() & 1))
      labels[i] = 1;
  const auto strata = assign_strata(s, labels);
  CHECK(strata.weights.at(1) == 0.0);
  const auto st = stratified_ame(s, strata, bandwidths(0.6));
  REQUIRE(st.strata.size() == 2);
  CHECK(st.strata[1].skipped == "no bunched observations");
  CHECK_FALSE(st.strata[1].estimate.has_value());
  CHECK(st.kept_weight == 1.0);
  CHECK(st.ame == st.strata[0].estimate->ame);
}

TEST_CASE("strata with opposite selection signs")
{
  DgpSpec spec = linear_selection_dgp();
  StratumSpec up, down;
  up.probability = 0.5;
  up.selection = SelectionSpec::both(OffsetFunction::polynomial({ 2.0 }));
  down.probability = 0.5;
  down.selection = SelectionSpec::both(OffsetFunction::polynomial({ -2.0 }));
  spec.strata = { up, down };
  CHECK(true_ame(spec) == doctest::Approx(-1.0).epsilon(1e-12));
  const auto s = sample_dgp(spec, 1000000, 23).sample;
  const auto c = bandwidths(0.5);
  const auto st = stratified_ame(s, strata_from_control(s, "stratum"), c);
  REQUIRE(st.strata.size() == 2);
  CHECK(st.strata[0].estimate->theta == 1);
  CHECK(st.strata[1].estimate->theta == -1);
  CHECK(std::abs(st.ame - (-1.0)) < 0.2);
  // Pooling mixes the two selection laws; the result is either refused or off target.
  double pooled_error = 1e9;
  try {
    pooled_error = std::abs(ame(s, c).ame - (-1.0));
  } catch (const Error&) {
  }
  CHECK(pooled_error > std::abs(st.ame - (-1.0)));
}

TEST_CASE("constant control column gives uniform weights")
{
  const auto base = sample_dgp(linear_selection_dgp(), 100000, 24).sample;
  const auto s = with_control(base, { "z", ControlKind::continuous,
                                      std::vector<double>(base.size(), 1.5) });
  const auto c = bandwidths(0.6);
  const auto w = control_weights(s, { "z" }, { 1.5 }, { 0.5 }, { KernelKind::epanechnikov });
  for (double v : w)
    CHECK(v == doctest::Approx(1.0 / static_cast<double>(s.size())).epsilon(1e-12));
  const auto weighted = kernel_weighted_ame(s, { "z" }, { 1.5 }, { 0.5 },
                                            { KernelKind::epanechnikov }, c);
  CHECK(weighted.ame == doctest::Approx(ame(base, c).ame).epsilon(1e-9));
}

TEST_CASE("huge control bandwidth converges to the unconditional estimate")
{
  auto spec = linear_selection_dgp();
  spec.control = ContinuousControlSpec{ "z", 0.5, 2.5, true };
  const auto s = sample_dgp(spec, 200000, 25).sample;
  const auto c = bandwidths(0.6);
  const auto wide = kernel_weighted_ame(s, { "z" }, { 1.0 }, { 1e7 },
                                        { KernelKind::epanechnikov }, c);
  CHECK(wide.ame == doctest::Approx(ame(s, c).ame).epsilon(1e-6));
}

TEST_CASE("kernel-weighted estimate tracks a control-dependent effect")
{
  auto spec = linear_selection_dgp();
  spec.control = ContinuousControlSpec{ "z", 0.5, 2.5, true };
  CHECK(true_ame(spec) == doctest::Approx(-1.5).epsilon(1e-12));
  const auto s = sample_dgp(spec, 1000000, 26).sample;
  const auto c = bandwidths(0.5);
  for (double z0 : { 1.0, 2.0 }) {
    const auto a = kernel_weighted_ame(s, { "z" }, { z0 }, { 0.25 },
                                       { KernelKind::epanechnikov }, c);
    CHECK(std::abs(a.ame - (-z0)) < 0.35);
  }
  CHECK(error_code([&] {
          kernel_weighted_ame(s, { "z" }, { 10.0 }, { 0.25 }, { KernelKind::epanechnikov }, c);
        }) == "no_weighted_mass");
  CHECK(error_code([&] {
          kernel_weighted_ame(s, { "stratum_missing" }, { 1.0 }, { 0.25 },
                              { KernelKind::epanechnikov }, c);
        }) == "missing_column");
}

TEST_CASE("one cluster is a single stratum")
{
  const auto base = sample_dgp(linear_selection_dgp(), 1000, 27).sample;
  std::vector<double> z(base.size());
  std::iota(z.begin(), z.end(), 0.0);
  const auto s = with_control(base, { "z", ControlKind::continuous, z });
  const auto a = cluster_controls(s, 1, 3);
  CHECK(a.kept == std::vector<std::int64_t>{ 0 });
  CHECK(a.weights.at(0) == 1.0);
  CHECK(error_code([&] { cluster_controls(s, 0, 3); }) == "invalid_argument");
}

TEST_CASE("two separated blobs are recovered by clustering")
{
  std::mt19937_64 rng(28);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 4000;
  std::vector<double> x(n), y(n), z1(n), z2(n);
  std::vector<int> blob(n);
  for (std::size_t i = 0; i < n; ++i) {
    blob[i] = static_cast<int>(i % 2);
    const double c = blob[i] == 0 ? -3.0 : 3.0;
    z1[i] = c + 0.5 * g(rng);
    z2[i] = -c + 0.5 * g(rng);
    x[i] = u(rng) < 0.3 ? 0.0 : u(rng) + 1e-9;
    y[i] = g(rng);
  }
  const Sample s(x, y, 0.0,
                 { { "z1", ControlKind::continuous, z1 }, { "z2", ControlKind::continuous, z2 } });
  const auto a = cluster_controls(s, 2, 5);
  // Nearest-centroid oracle on the known blob centers.
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d0 = std::hypot(z1[i] + 3.0, z2[i] - 3.0);
    const double d1 = std::hypot(z1[i] - 3.0, z2[i] + 3.0);
    const int oracle = d0 < d1 ? 0 : 1;
    agree += (a.labels[i] == a.labels[0]) == (oracle == blob[0]) ? 1 : 0;
  }
  CHECK(static_cast<double>(agree) / n >= 0.99);
  double total = 0.0;
  for (auto k : a.kept)
    total += a.weights.at(k);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(a.kept.size() == 2);
}

TEST_CASE("clusters mixing continuous and discrete controls")
{
  std::mt19937_64 rng(29);
  std::normal_distribution<double> g;
  const std::size_t n = 600;
  std::vector<double> x(n), y(n), z(n), d(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = i % 3 == 0 ? 0.0 : 0.5 + 0.001 * static_cast<double>(i);
    y[i] = g(rng);
    d[i] = static_cast<double>(i % 2);
    z[i] = g(rng);
  }
  const Sample s(x, y, 0.0,
                 { { "z", ControlKind::continuous, z }, { "d", ControlKind::discrete, d } });
  const auto a = cluster_controls(s, 3, 9);
  CHECK(a.labels.size() == n);
  double total = 0.0;
  for (auto k : a.kept)
    total += a.weights.at(k);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cluster_controls(s, 3, 9).labels == a.labels);
}
