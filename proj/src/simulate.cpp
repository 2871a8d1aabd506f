#include "bunching/simulate.hpp"

#include "bunching/bootstrap.hpp"
#include "bunching/error.hpp"
#include "bunching/estimator.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <mutex>
#include <numbers>
#include <random>

namespace bunching {

using nlohmann::json;

namespace {

constexpr std::size_t pushforward_grid = 1'000'000;
constexpr double normal_span = 12.0; // standard deviations covered by grids

void require(bool ok, const std::string& what)
{
  if (!ok)
    fail(ErrorKind::input, "invalid_spec", what);
}

// Derivative of the law's log density.
double log_pdf_slope(const XStarLaw& law, double x)
{
  return law.kind == XStarLaw::Kind::normal ? -(x - law.mean) / (law.sd * law.sd) : 0.0;
}

double law_lo(const XStarLaw& law)
{
  return law.kind == XStarLaw::Kind::normal ? law.mean - normal_span * law.sd : law.lo;
}

double law_hi(const XStarLaw& law)
{
  return law.kind == XStarLaw::Kind::normal ? law.mean + normal_span * law.sd : law.hi;
}

double second_derivative(const OffsetFunction& f, double d)
{
  if (f.kind == OffsetFunction::Kind::exponential)
    return f.scale * f.rate * f.rate * std::exp(f.rate * d);
  double s = 0.0, p = 1.0;
  for (std::size_t k = 1; k < f.coefficients.size(); ++k) {
    const double power = static_cast<double>(k + 1);
    s += f.coefficients[k] * power * (power - 1.0) * p;
    p *= d;
  }
  return s;
}

json law_json(const XStarLaw& law)
{
  if (law.kind == XStarLaw::Kind::normal)
    return { { "kind", "normal" }, { "mean", law.mean }, { "sd", law.sd } };
  return { { "kind", "uniform" }, { "lo", law.lo }, { "hi", law.hi } };
}

XStarLaw law_from_json(const json& j)
{
  const auto kind = j.value("kind", std::string("normal"));
  if (kind == "normal")
    return XStarLaw::normal(j.value("mean", 0.0), j.value("sd", 1.0));
  if (kind == "uniform")
    return XStarLaw::uniform(j.value("lo", 0.0), j.value("hi", 1.0));
  fail(ErrorKind::input, "invalid_spec", "unknown X* law '" + kind + "'");
}

json function_json(const OffsetFunction& f)
{
  if (f.kind == OffsetFunction::Kind::polynomial)
    return { { "kind", "polynomial" }, { "coefficients", f.coefficients } };
  return { { "kind", "exponential" }, { "scale", f.scale }, { "rate", f.rate } };
}

OffsetFunction function_from_json(const json& j)
{
  const auto kind = j.value("kind", std::string("polynomial"));
  if (kind == "polynomial")
    return OffsetFunction::polynomial(j.at("coefficients").get<std::vector<double>>());
  if (kind == "exponential")
    return OffsetFunction::exponential(j.at("scale").get<double>(), j.at("rate").get<double>());
  fail(ErrorKind::input, "invalid_spec", "unknown function kind '" + kind + "'");
}

json selection_json(const SelectionSpec& s)
{
  return { { "below", function_json(s.below) }, { "above", function_json(s.above) } };
}

SelectionSpec selection_from_json(const json& j)
{
  if (j.contains("below") || j.contains("above"))
    return { function_from_json(j.at("below")), function_from_json(j.at("above")) };
  return SelectionSpec::both(function_from_json(j));
}

// Bunched-side share for each stratum: pi_l * F_l, normalized.
std::vector<double> bunched_stratum_weights(const DgpSpec& spec)
{
  std::vector<double> w;
  double total = 0.0;
  for (std::size_t l = 0; l < spec.strata.size(); ++l) {
    const auto& st = spec.strata[l];
    const auto& law = st.xstar ? *st.xstar : spec.xstar;
    w.push_back(st.probability * law.cdf(spec.bunch_point));
    total += w.back();
  }
  for (double& v : w)
    v /= total;
  return w;
}

double control_att_scale(const DgpSpec& spec)
{
  if (spec.control && spec.control->scales_att)
    return 0.5 * (spec.control->lo + spec.control->hi);
  return 1.0;
}

DgpSpec stratum_view(const DgpSpec& spec, std::size_t l)
{
  DgpSpec s = spec;
  s.strata.clear();
  s.control.reset();
  const auto& st = spec.strata.at(l);
  if (st.xstar)
    s.xstar = *st.xstar;
  if (st.selection)
    s.selection = *st.selection;
  if (st.att)
    s.att = *st.att;
  return s;
}

} // namespace

XStarLaw XStarLaw::normal(double mean, double sd)
{
  XStarLaw l;
  l.kind = Kind::normal;
  l.mean = mean;
  l.sd = sd;
  return l;
}

XStarLaw XStarLaw::uniform(double lo, double hi)
{
  XStarLaw l;
  l.kind = Kind::uniform;
  l.lo = lo;
  l.hi = hi;
  return l;
}

double XStarLaw::pdf(double x) const
{
  if (kind == Kind::normal) {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
  }
  return x >= lo && x <= hi ? 1.0 / (hi - lo) : 0.0;
}

double XStarLaw::cdf(double x) const
{
  if (kind == Kind::normal)
    return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
  return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
}

OffsetFunction OffsetFunction::polynomial(std::vector<double> coefficients)
{
  OffsetFunction f;
  f.kind = Kind::polynomial;
  f.coefficients = std::move(coefficients);
  return f;
}

OffsetFunction OffsetFunction::exponential(double scale, double rate)
{
  OffsetFunction f;
  f.kind = Kind::exponential;
  f.scale = scale;
  f.rate = rate;
  return f;
}

double OffsetFunction::value(double d) const
{
  if (kind == Kind::exponential)
    return scale * std::expm1(rate * d);
  // Horner on d * (c0 + c1 d + c2 d^2 + ...)
  double acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
    acc = acc * d + *it;
  return acc * d;
}

double OffsetFunction::derivative(double d) const
{
  if (kind == Kind::exponential)
    return scale * rate * std::exp(rate * d);
  double acc = 0.0;
  for (std::size_t k = coefficients.size(); k-- > 0;)
    acc = acc * d + static_cast<double>(k + 1) * coefficients[k];
  return acc;
}

void validate(const DgpSpec& spec)
{
  auto check_law = [](const XStarLaw& law) {
    if (law.kind == XStarLaw::Kind::normal)
      require(std::isfinite(law.mean) && law.sd > 0.0 && std::isfinite(law.sd),
              "normal X* law needs a finite mean and positive sd");
    else
      require(std::isfinite(law.lo) && std::isfinite(law.hi) && law.hi > law.lo,
              "uniform X* law needs lo < hi");
  };
  auto check_fn = [](const OffsetFunction& f) {
    if (f.kind == OffsetFunction::Kind::exponential)
      require(std::isfinite(f.scale) && std::isfinite(f.rate), "exponential terms must be finite");
    for (double c : f.coefficients)
      require(std::isfinite(c), "polynomial coefficients must be finite");
  };
  check_law(spec.xstar);
  check_fn(spec.selection.below);
  check_fn(spec.selection.above);
  check_fn(spec.att);
  require(std::isfinite(spec.bunch_point) && std::isfinite(spec.y_base),
          "bunch point and base outcome must be finite");
  require(spec.noise.sd >= 0.0 && spec.noise.variance_slope >= 0.0,
          "noise sd and variance slope must be nonnegative");
  if (!spec.strata.empty()) {
    double total = 0.0;
    for (const auto& st : spec.strata) {
      require(st.probability >= 0.0, "stratum probabilities must be nonnegative");
      total += st.probability;
      if (st.xstar)
        check_law(*st.xstar);
    }
    require(std::abs(total - 1.0) < 1e-9, "stratum probabilities must sum to 1");
  }
  if (spec.control)
    require(spec.control->hi > spec.control->lo, "control range needs lo < hi");
}

SimulatedData sample_dgp(const DgpSpec& spec, std::size_t n, std::uint64_t seed)
{
  validate(spec);
  if (n == 0)
    fail(ErrorKind::input, "invalid_argument", "sample size must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> cumulative;
  for (const auto& st : spec.strata)
    cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + st.probability);

  SimulatedData out;
  auto& lat = out.latent;
  std::vector<double> x(n), y(n), stratum(n), z(n);
  lat.x_star.resize(n);
  lat.selection.resize(n);
  lat.noise.resize(n);
  lat.y_at_bunch.resize(n);
  lat.att.resize(n);
  const double xb = spec.bunch_point;
  for (std::size_t i = 0; i < n; ++i) {
    const XStarLaw* law = &spec.xstar;
    const SelectionSpec* sel = &spec.selection;
    const OffsetFunction* att = &spec.att;
    if (!cumulative.empty()) {
      const double u = unit(rng);
      std::size_t l = 0;
      while (l + 1 < cumulative.size() && u >= cumulative[l])
        ++l;
      stratum[i] = static_cast<double>(l);
      const auto& st = spec.strata[l];
      if (st.xstar)
        law = &*st.xstar;
      if (st.selection)
        sel = &*st.selection;
      if (st.att)
        att = &*st.att;
    }
    double att_scale = 1.0;
    if (spec.control) {
      z[i] = spec.control->lo + (spec.control->hi - spec.control->lo) * unit(rng);
      if (spec.control->scales_att)
        att_scale = z[i];
    }
    const double xs = law->kind == XStarLaw::Kind::normal
                        ? law->mean + law->sd * gauss(rng)
                        : law->lo + (law->hi - law->lo) * unit(rng);
    const double xi = std::max(xs, xb);
    const double d = xi - xb;
    const double sd = std::sqrt(spec.noise.sd * spec.noise.sd + spec.noise.variance_slope * d);
    const double eps = sd * gauss(rng);
    const double s = sel->value(xs - xb);
    const double a = att_scale * att->value(d);
    lat.x_star[i] = xs;
    lat.selection[i] = s;
    lat.noise[i] = eps;
    lat.att[i] = a;
    lat.y_at_bunch[i] = spec.y_base + s + eps;
    x[i] = xi;
    y[i] = spec.y_base + a + s + eps;
  }
  std::vector<ControlColumn> controls;
  if (!spec.strata.empty())
    controls.push_back({ "stratum", ControlKind::discrete, std::move(stratum) });
  if (spec.control)
    controls.push_back({ spec.control->name, ControlKind::continuous, std::move(z) });
  out.sample = Sample(std::move(x), std::move(y), xb, std::move(controls));
  return out;
}

double true_ame(const DgpSpec& spec)
{
  const double scale = control_att_scale(spec);
  if (spec.strata.empty())
    return scale * spec.att.derivative(0.0);
  const auto w = bunched_stratum_weights(spec);
  double total = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l)
    total += w[l] * stratum_view(spec, l).att.derivative(0.0);
  return scale * total;
}

double true_att(const DgpSpec& spec, double x)
{
  const double d = x - spec.bunch_point;
  if (d < 0.0)
    fail(ErrorKind::input, "x_below_bunch", "ATT is defined at or above the bunching point");
  const double scale = control_att_scale(spec);
  if (spec.strata.empty())
    return scale * spec.att.value(d);
  // Average over strata present at x.
  double num = 0.0, den = 0.0;
  for (std::size_t l = 0; l < spec.strata.size(); ++l) {
    const auto v = stratum_view(spec, l);
    const double f = spec.strata[l].probability * v.xstar.pdf(x);
    num += f * v.att.value(d);
    den += f;
  }
  return den > 0.0 ? scale * num / den : 0.0;
}

double true_s_prime(const DgpSpec& spec)
{
  return spec.selection.above.derivative(0.0);
}

int true_theta(const DgpSpec& spec)
{
  const double s = true_s_prime(spec);
  return s > 0.0 ? 1 : (s < 0.0 ? -1 : 0);
}

double true_boundary_density(const DgpSpec& spec)
{
  return spec.xstar.pdf(spec.bunch_point);
}

double true_bunch_mass(const DgpSpec& spec)
{
  return spec.xstar.cdf(spec.bunch_point);
}

double true_gap(const DgpSpec& spec)
{
  const double xb = spec.bunch_point;
  const double mass = true_bunch_mass(spec);
  if (!(mass > 0.0))
    fail(ErrorKind::input, "invalid_spec", "the spec puts no mass at the bunching point");
  const double lo = law_lo(spec.xstar);
  if (!(lo < xb))
    return 0.0;
  auto integrand = [&](double x) { return spec.selection.below.value(x - xb) * spec.xstar.pdf(x); };
  const double mean_s =
    boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, lo, xb, 15, 1e-13) /
    mass;
  return -mean_s;
}

double pushforward_density(const DgpSpec& spec, double v, bool bunched_only)
{
  const double xb = spec.bunch_point;
  const double lo = law_lo(spec.xstar);
  const double hi = bunched_only ? xb : law_hi(spec.xstar);
  if (!(hi > lo))
    return 0.0;
  auto g = [&](double x) { return spec.selection.value(x - xb) - v; };
  // |s'| at a preimage; at the bunching point itself use the side in play.
  auto slope = [&](double x) {
    if (x < xb)
      return std::abs(spec.selection.below.derivative(x - xb));
    if (x > xb)
      return std::abs(spec.selection.above.derivative(x - xb));
    const double left = std::abs(spec.selection.below.derivative(0.0));
    if (bunched_only)
      return left;
    const double right = std::abs(spec.selection.above.derivative(0.0));
    return 2.0 / (1.0 / left + 1.0 / right); // midpoint of the two one-sided densities
  };
  const double step = (hi - lo) / static_cast<double>(pushforward_grid);
  double density = 0.0;
  double x0 = lo, g0 = g(lo);
  for (std::size_t j = 1; j <= pushforward_grid; ++j) {
    const double x1 = j == pushforward_grid ? hi : lo + step * static_cast<double>(j);
    const double g1 = g(x1);
    double root = std::numeric_limits<double>::quiet_NaN();
    if (g0 == 0.0)
      root = x0;
    else if (j == pushforward_grid && g1 == 0.0)
      root = x1;
    else if ((g0 < 0.0) != (g1 < 0.0) && g1 != 0.0) {
      auto tol = boost::math::tools::eps_tolerance<double>(52);
      std::uintmax_t iters = 200;
      const auto [a, b] = boost::math::tools::bisect(g, x0, x1, tol, iters);
      root = 0.5 * (a + b);
    }
    if (std::isfinite(root)) {
      const double sl = slope(root);
      if (!(sl > 0.0))
        fail(ErrorKind::input, "flat_selection",
             "selection function is flat at a preimage; its pushforward has no density");
      density += spec.xstar.pdf(root) / sl;
    }
    x0 = x1;
    g0 = g1;
  }
  if (bunched_only) {
    const double mass = true_bunch_mass(spec);
    if (!(mass > 0.0))
      fail(ErrorKind::input, "invalid_spec", "the spec puts no mass at the bunching point");
    density /= mass;
  }
  return density;
}

double true_selection_density_at_zero(const DgpSpec& spec)
{
  return pushforward_density(spec, 0.0, true);
}

double true_selection_log_derivative(const DgpSpec& spec)
{
  const auto& below = spec.selection.below;
  const double s1 = below.derivative(0.0);
  if (s1 == 0.0)
    fail(ErrorKind::input, "flat_selection", "selection slope is zero at the bunching point");
  const double s2 = second_derivative(below, 0.0);
  return (log_pdf_slope(spec.xstar, spec.bunch_point) - s2 / s1) / s1;
}

DgpSpec isoelastic_dgp(double gamma, double price, const XStarLaw& rho_law, const DgpSpec& outcome)
{
  if (!(gamma > 0.0) || !(price > 0.0) || !std::isfinite(gamma) || !std::isfinite(price))
    fail(ErrorKind::input, "invalid_argument", "isoelastic model needs gamma > 0 and price > 0");
  // X* = a (1 + rho) - 1 is affine in rho, so normal and uniform laws map to
  // the same family.
  const double a = std::pow(price, -1.0 / gamma);
  DgpSpec spec = outcome;
  if (rho_law.kind == XStarLaw::Kind::normal)
    spec.xstar = XStarLaw::normal(a * (1.0 + rho_law.mean) - 1.0, a * rho_law.sd);
  else
    spec.xstar = XStarLaw::uniform(a * (1.0 + rho_law.lo) - 1.0, a * (1.0 + rho_law.hi) - 1.0);
  spec.metadata["isoelastic"] = { { "gamma", gamma }, { "price", price }, { "rho", law_json(rho_law) } };
  validate(spec);
  return spec;
}

DgpSpec calibrated_application_spec()
{
  // Targets, in grams and cigarettes per day.
  constexpr double bunched_share = 0.81;
  constexpr double share_one_to_ten = 0.11;
  constexpr double selection_slope = -8.10;
  constexpr double gap = -147.6;
  constexpr double effect_slope = -8.0;
  constexpr double bunched_mean_outcome = 3499.0;
  constexpr double outcome_noise_sd = 450.0;

  // Normal X* with P(X* <= 0) = 0.81 and P(0 < X* <= 10) = 0.11.
  const boost::math::normal unit;
  const double z_bunch = boost::math::quantile(unit, bunched_share);
  const double z_ten = boost::math::quantile(unit, bunched_share + share_one_to_ten);
  const double sd = 10.0 / (z_ten - z_bunch);
  const double mean = -z_bunch * sd;

  // Below the bunch s(x) = (|slope| / r)(1 - exp(r x)): slope -8.1 at zero,
  // positive and saturating for x < 0. Pick r so E[s | X* <= 0] = -gap.
  auto mean_selection = [&](double r) {
    // E[exp(r X) | X <= 0] for X ~ N(mean, sd^2)
    const double shifted = boost::math::cdf(unit, (-mean - r * sd * sd) / sd);
    const double mgf = std::exp(r * mean + 0.5 * r * r * sd * sd) * shifted / bunched_share;
    return (-selection_slope / r) * (1.0 - mgf);
  };
  double lo = 1e-6, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_selection(mid) > -gap ? lo : hi) = mid;
  }
  const double rate = 0.5 * (lo + hi);

  DgpSpec spec;
  spec.xstar = XStarLaw::normal(mean, sd);
  spec.bunch_point = 0.0;
  spec.selection.below = OffsetFunction::exponential(selection_slope / rate, rate);
  spec.selection.above = OffsetFunction::polynomial({ selection_slope });
  spec.att = OffsetFunction::polynomial({ effect_slope });
  spec.noise.sd = outcome_noise_sd;
  spec.y_base = bunched_mean_outcome + gap;
  spec.metadata = {
    { "name", "calibrated_application" },
    { "units", { { "treatment", "cigarettes per day" }, { "outcome", "grams" } } },
    { "targets",
      { { "bunched_share", bunched_share },
        { "share_one_to_ten", share_one_to_ten },
        { "selection_slope_at_bunch", selection_slope },
        { "outcome_gap", gap },
        { "ame", effect_slope },
        { "bunched_mean_outcome", bunched_mean_outcome },
        { "outcome_noise_sd", outcome_noise_sd } } },
    { "notes",
      "Effect slope -8 is a modeling choice inside the published estimate range. Selection is "
      "linear above the bunch and exponential (saturating) below it." },
  };
  return spec;
}

json to_json(const DgpSpec& spec)
{
  json j = {
    { "xstar", law_json(spec.xstar) },
    { "bunch_point", spec.bunch_point },
    { "selection", selection_json(spec.selection) },
    { "att", function_json(spec.att) },
    { "noise", { { "sd", spec.noise.sd }, { "variance_slope", spec.noise.variance_slope } } },
    { "y_base", spec.y_base },
    { "metadata", spec.metadata },
  };
  if (!spec.strata.empty()) {
    json strata = json::array();
    for (const auto& st : spec.strata) {
      json s = { { "probability", st.probability } };
      if (st.xstar)
        s["xstar"] = law_json(*st.xstar);
      if (st.selection)
        s["selection"] = selection_json(*st.selection);
      if (st.att)
        s["att"] = function_json(*st.att);
      strata.push_back(std::move(s));
    }
    j["strata"] = std::move(strata);
  }
  if (spec.control)
    j["control"] = { { "name", spec.control->name },
                     { "lo", spec.control->lo },
                     { "hi", spec.control->hi },
                     { "scales_att", spec.control->scales_att } };
  return j;
}

DgpSpec dgp_from_json(const json& doc)
{
  DgpSpec spec;
  try {
    if (doc.contains("xstar"))
      spec.xstar = law_from_json(doc.at("xstar"));
    spec.bunch_point = doc.value("bunch_point", 0.0);
    if (doc.contains("selection"))
      spec.selection = selection_from_json(doc.at("selection"));
    if (doc.contains("att"))
      spec.att = function_from_json(doc.at("att"));
    if (doc.contains("noise")) {
      spec.noise.sd = doc.at("noise").value("sd", 1.0);
      spec.noise.variance_slope = doc.at("noise").value("variance_slope", 0.0);
    }
    spec.y_base = doc.value("y_base", 0.0);
    if (doc.contains("strata"))
      for (const auto& s : doc.at("strata")) {
        StratumSpec st;
        st.probability = s.at("probability").get<double>();
        if (s.contains("xstar"))
          st.xstar = law_from_json(s.at("xstar"));
        if (s.contains("selection"))
          st.selection = selection_from_json(s.at("selection"));
        if (s.contains("att"))
          st.att = function_from_json(s.at("att"));
        spec.strata.push_back(std::move(st));
      }
    if (doc.contains("control")) {
      const auto& c = doc.at("control");
      spec.control = ContinuousControlSpec{ c.value("name", std::string("z")), c.at("lo").get<double>(),
                                            c.at("hi").get<double>(), c.value("scales_att", true) };
    }
    if (doc.contains("metadata"))
      spec.metadata = doc.at("metadata");
  } catch (const json::exception& e) {
    fail(ErrorKind::input, "invalid_spec", std::string("DGP spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

ValidationSummary run_validation(const DgpSpec& spec,
                                 int replications,
                                 std::size_t n,
                                 std::uint64_t seed,
                                 const EstimationConfig& config,
                                 int threads)
{
  if (replications < 1)
    fail(ErrorKind::input, "invalid_argument", "replications must be positive");
  validate(spec);
  validate(config);
  const auto count = static_cast<std::size_t>(replications);
  std::vector<std::optional<AmeEstimate>> results(count);
  parallel_for(count, threads, [&](std::size_t r) {
    const auto rep_seed = replicate_seed(seed, r);
    const auto data = sample_dgp(spec, n, rep_seed);
    EstimationConfig c = config;
    c.bootstrap.seed = replicate_seed(config.bootstrap.seed, r);
    c.bootstrap.threads = 1;
    try {
      results[r] = ame_with_inference(data.sample, c);
    } catch (const Error&) {
      results[r].reset();
    }
  });

  ValidationSummary s;
  s.replications = replications;
  s.n = n;
  s.seed = seed;
  s.truth = true_ame(spec);
  s.true_theta = true_theta(spec);
  int covered = 0, with_ci = 0, agree = 0;
  double sum = 0.0, sq = 0.0;
  for (const auto& r : results) {
    if (!r)
      continue;
    ++s.succeeded;
    s.estimates.push_back(r->ame);
    s.thetas.push_back(r->theta);
    sum += r->ame;
    sq += (r->ame - s.truth) * (r->ame - s.truth);
    if (r->theta == s.true_theta)
      ++agree;
    if (r->ci) {
      ++with_ci;
      if (r->ci->lo <= s.truth && s.truth <= r->ci->hi)
        ++covered;
    }
  }
  if (s.succeeded == 0)
    fail(ErrorKind::degenerate, "all_replications_failed", "every Monte Carlo replication failed");
  s.mean_ame = sum / s.succeeded;
  s.bias = s.mean_ame - s.truth;
  s.rmse = std::sqrt(sq / s.succeeded);
  s.theta_agreement = static_cast<double>(agree) / s.succeeded;
  if (with_ci > 0)
    s.coverage = static_cast<double>(covered) / with_ci;
  return s;
}

json to_json(const ValidationSummary& s)
{
  json j = {
    { "replications", s.replications },
    { "succeeded", s.succeeded },
    { "n", s.n },
    { "seed", s.seed },
    { "truth", s.truth },
    { "true_theta", s.true_theta },
    { "mean_ame", s.mean_ame },
    { "bias", s.bias },
    { "rmse", s.rmse },
    { "theta_agreement", s.theta_agreement },
    { "estimates", s.estimates },
    { "thetas", s.thetas },
  };
  j["coverage"] = s.coverage ? json(*s.coverage) : json(nullptr);
  return j;
}

} // namespace bunching
