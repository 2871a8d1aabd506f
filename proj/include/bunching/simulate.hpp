#pragma once

#include "bunching/config.hpp"
#include "bunching/sample.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace bunching {

//! Law of the latent treatment X*.
struct XStarLaw
{
  enum class Kind
  {
    normal,
    uniform
  };
  Kind kind = Kind::normal;
  double mean = 0.0; // normal
  double sd = 1.0;   // normal
  double lo = 0.0;   // uniform
  double hi = 1.0;   // uniform

  static XStarLaw normal(double mean, double sd);
  static XStarLaw uniform(double lo, double hi);
  double pdf(double x) const;
  double cdf(double x) const;
};

//! Function of the offset d = x - bunch_point that vanishes at d = 0.
struct OffsetFunction
{
  enum class Kind
  {
    polynomial, // sum_k coefficients[k] * d^(k+1)
    exponential // scale * (exp(rate * d) - 1)
  };
  Kind kind = Kind::polynomial;
  std::vector<double> coefficients;
  double scale = 0.0;
  double rate = 0.0;

  static OffsetFunction polynomial(std::vector<double> coefficients);
  static OffsetFunction exponential(double scale, double rate);
  double value(double d) const;
  double derivative(double d) const;
};

//! Selection function, allowed to differ below and above the bunching point.
struct SelectionSpec
{
  OffsetFunction below;
  OffsetFunction above;

  static SelectionSpec both(const OffsetFunction& f) { return { f, f }; }
  double value(double d) const { return d <= 0.0 ? below.value(d) : above.value(d); }
};

struct NoiseLaw
{
  double sd = 1.0;
  //! Variance grows by this much per treatment unit above the bunching point.
  double variance_slope = 0.0;
};

struct StratumSpec
{
  double probability = 1.0;
  std::optional<XStarLaw> xstar;
  std::optional<SelectionSpec> selection;
  std::optional<OffsetFunction> att;
};

//! Continuous control Z ~ Uniform(lo, hi); when scales_att, ATT(x; z) = z * ATT(x).
struct ContinuousControlSpec
{
  std::string name = "z";
  double lo = 0.0;
  double hi = 1.0;
  bool scales_att = true;
};

struct DgpSpec
{
  XStarLaw xstar;
  double bunch_point = 0.0;
  SelectionSpec selection;
  OffsetFunction att;
  NoiseLaw noise;
  double y_base = 0.0;
  //! Optional discrete strata, emitted as control column "stratum".
  std::vector<StratumSpec> strata;
  std::optional<ContinuousControlSpec> control;
  nlohmann::json metadata = nlohmann::json::object();
};

struct LatentRecord
{
  std::vector<double> x_star;
  std::vector<double> selection; // s(X*)
  std::vector<double> noise;     // epsilon
  std::vector<double> y_at_bunch; // y_base + s(X*) + epsilon
  std::vector<double> att;       // ATT at the observed treatment
};

struct SimulatedData
{
  Sample sample;
  LatentRecord latent;
};

//! Throws an input error when the spec violates its invariants.
void validate(const DgpSpec& spec);

SimulatedData sample_dgp(const DgpSpec& spec, std::size_t n, std::uint64_t seed);

double true_ame(const DgpSpec& spec);
double true_att(const DgpSpec& spec, double x);
double true_s_prime(const DgpSpec& spec);
int true_theta(const DgpSpec& spec);
//! Unconditional density of X just above the bunching point.
double true_boundary_density(const DgpSpec& spec);
//! P(X* <= bunch point).
double true_bunch_mass(const DgpSpec& spec);
//! E[Y | X = xbar+] - E[Y | X = xbar].
double true_gap(const DgpSpec& spec);
//! Density of s(X*) at v, over the whole X* law or conditional on bunching.
//! Preimages are located on a 10^6-point grid and refined by bisection.
double pushforward_density(const DgpSpec& spec, double v, bool bunched_only);
//! Bunched-side limit at 0 of the selection density given X = xbar.
double true_selection_density_at_zero(const DgpSpec& spec);
//! Its log-derivative at 0 from the same side.
double true_selection_log_derivative(const DgpSpec& spec);

//! Latent treatment induced by an isoelastic demand model,
//! X* = (1 + rho) / price^(1/gamma) - 1, with outcome parts taken from `outcome`.
DgpSpec isoelastic_dgp(double gamma, double price, const XStarLaw& rho_law, const DgpSpec& outcome);

//! Synthetic stand-in for the birth-weight application (grams and
//! cigarettes per day); the targets are recorded in metadata.
DgpSpec calibrated_application_spec();

nlohmann::json to_json(const DgpSpec& spec);
DgpSpec dgp_from_json(const nlohmann::json& doc);

struct ValidationSummary
{
  int replications = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double truth = 0.0;
  int true_theta = 0;
  int succeeded = 0;
  double mean_ame = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  std::optional<double> coverage; // share of bootstrap intervals covering the truth
  double theta_agreement = 0.0;   // share of runs with theta == true theta
  std::vector<double> estimates;
  std::vector<int> thetas;
};

//! Simulate-and-estimate Monte Carlo; replicate r uses seed derived from (seed, r).
ValidationSummary run_validation(const DgpSpec& spec,
                                 int replications,
                                 std::size_t n,
                                 std::uint64_t seed,
                                 const EstimationConfig& config,
                                 int threads = 0);

nlohmann::json to_json(const ValidationSummary& summary);

} // namespace bunching
