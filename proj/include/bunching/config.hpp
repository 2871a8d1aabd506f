#pragma once

#include "bunching/kernels.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace bunching {

enum class NoiseModel
{
  nonparametric, // boundary cf from the complex local linear fit
  normal_plugin  // boundary outcome modeled as normal
};

//! How the inverse transform treats the selection density at zero.
enum class InversionMode
{
  //! Plain band-limited inversion; assumes the density is smooth at zero.
  symmetric,
  //! Models a jump at zero: the bunched selection term lies on one side of
  //! zero when the selection function is monotone, so the density is
  //! recovered as a one-sided limit.
  one_sided
};

enum class ThetaRule
{
  fixed,    // |gap| <= theta_tolerance means theta = 0
  bootstrap // tolerance = theta_z * bootstrap SE of the gap
};

struct QuadratureConfig
{
  //! Half-width of the frequency grid; 10 / IQR(bunched Y) when absent.
  std::optional<double> half_width;
  //! Interval count over the symmetric grid; even and at least 16.
  int nodes = 2048;
  //! Frequencies where |boundary cf| falls below this are excluded.
  double floor = 1e-3;
  //! Error when more than this share of regularizer mass is excluded.
  double max_excluded = 0.05;
  //! Relative tolerance for the discarded imaginary part.
  double imaginary_tolerance = 1e-2;
};

struct BootstrapConfig
{
  int replications = 0;
  std::uint64_t seed = 1;
  int threads = 0; // 0 means hardware concurrency
};

struct EstimationConfig
{
  double h1 = 1.0; // boundary regression
  double h2 = 1.0; // boundary density
  double h3 = 1.0; // boundary characteristic function
  //! Deconvolution regularization; chosen from the data when absent.
  std::optional<double> h4;
  //! Bandwidth for the boundary intercept; h1 when absent.
  std::optional<double> h_mean;
  //! Bandwidth for conditional means above the boundary; h1 when absent.
  std::optional<double> h_interior;

  KernelKind kernel1 = KernelKind::triangular;
  KernelKind kernel2 = KernelKind::epanechnikov;
  KernelKind kernel3 = KernelKind::triangular;
  KernelKind kernel4 = KernelKind::sinc_flat;

  QuadratureConfig quadrature;
  NoiseModel noise_model = NoiseModel::nonparametric;
  InversionMode inversion = InversionMode::one_sided;
  //! Data-driven frequency cutoff: first frequency where the boundary cf
  //! modulus drops below cutoff_constant * n_eff^(-1/4).
  double cutoff_constant = 1.0;
  bool leave_one_out_variance = false;

  ThetaRule theta_rule = ThetaRule::fixed;
  double theta_tolerance = 0.0;
  double theta_z = 1.96;
  int theta_replications = 200;

  BootstrapConfig bootstrap;
  double bunch_match_tolerance = 0.0;

  double mean_bandwidth() const { return h_mean.value_or(h1); }
  double interior_bandwidth() const { return h_interior.value_or(h1); }
};

//! Throws an input error naming the first violated constraint.
void validate(const EstimationConfig& config);

nlohmann::json to_json(const EstimationConfig& config);
//! Overlays the keys present in `doc` onto `base`; unknown keys are errors.
EstimationConfig config_from_json(const nlohmann::json& doc,
                                  const EstimationConfig& base = {});

//! FNV-1a hash of the canonical JSON form, as 16 hex digits.
std::string config_hash(const EstimationConfig& config);

std::string_view to_string(NoiseModel model);
std::string_view to_string(InversionMode mode);
std::string_view to_string(ThetaRule rule);
NoiseModel noise_model_from_string(std::string_view name);
InversionMode inversion_mode_from_string(std::string_view name);
ThetaRule theta_rule_from_string(std::string_view name);

} // namespace bunching
