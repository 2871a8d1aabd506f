#include "bunching/config.hpp"

#include "bunching/error.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace bunching {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& what)
{
  if (!ok)
    fail(ErrorKind::input, "invalid_config", what);
}

bool positive(double v)
{
  return std::isfinite(v) && v > 0.0;
}

template<typename T>
void read(const json& doc, const char* key, T& out)
{
  if (doc.contains(key))
    out = doc.at(key).get<T>();
}

template<typename T>
void read(const json& doc, const char* key, std::optional<T>& out)
{
  if (!doc.contains(key))
    return;
  if (doc.at(key).is_null())
    out.reset();
  else
    out = doc.at(key).get<T>();
}

void reject_unknown(const json& doc, std::initializer_list<const char*> keys, const char* where)
{
  std::set<std::string> known(keys.begin(), keys.end());
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known.count(it.key()))
      fail(ErrorKind::input, "invalid_config",
           std::string("unknown key '") + it.key() + "' in " + where);
}

json optional_json(const std::optional<double>& v)
{
  return v ? json(*v) : json(nullptr);
}

} // namespace

void validate(const EstimationConfig& c)
{
  require(positive(c.h1), "h1 must be positive");
  require(positive(c.h2), "h2 must be positive");
  require(positive(c.h3), "h3 must be positive");
  require(!c.h4 || positive(*c.h4), "h4 must be positive");
  require(!c.h_mean || positive(*c.h_mean), "h_mean must be positive");
  require(!c.h_interior || positive(*c.h_interior), "h_interior must be positive");
  require(!c.quadrature.half_width || positive(*c.quadrature.half_width),
          "quadrature.half_width must be positive");
  require(c.quadrature.nodes >= 16 && c.quadrature.nodes % 2 == 0,
          "quadrature.nodes must be even and at least 16");
  require(c.quadrature.floor >= 0.0, "quadrature.floor must be nonnegative");
  require(c.quadrature.max_excluded >= 0.0 && c.quadrature.max_excluded <= 1.0,
          "quadrature.max_excluded must lie in [0, 1]");
  require(c.quadrature.imaginary_tolerance >= 0.0,
          "quadrature.imaginary_tolerance must be nonnegative");
  require(positive(c.cutoff_constant), "cutoff_constant must be positive");
  require(c.theta_tolerance >= 0.0, "theta_tolerance must be nonnegative");
  require(c.theta_z >= 0.0, "theta_z must be nonnegative");
  require(c.theta_rule == ThetaRule::fixed || c.theta_replications >= 2,
          "theta_replications must be at least 2");
  require(c.bootstrap.replications >= 0, "bootstrap.replications must be nonnegative");
  require(c.bootstrap.threads >= 0, "bootstrap.threads must be nonnegative");
  require(c.bunch_match_tolerance >= 0.0, "bunch_match_tolerance must be nonnegative");
  require(c.kernel1 != KernelKind::sinc_flat && c.kernel3 != KernelKind::sinc_flat,
          "regression kernels must be nonnegative (sinc_flat is for kernel4 only)");
  require(kernel_is_compact(c.kernel2), "kernel2 must have compact support");
  require(c.kernel4 == KernelKind::sinc_flat || c.kernel4 == KernelKind::gaussian,
          "kernel4 must be sinc_flat or gaussian");
}

json to_json(const EstimationConfig& c)
{
  return json{
    { "h1", c.h1 },
    { "h2", c.h2 },
    { "h3", c.h3 },
    { "h4", optional_json(c.h4) },
    { "h_mean", optional_json(c.h_mean) },
    { "h_interior", optional_json(c.h_interior) },
    { "kernel1", to_string(c.kernel1) },
    { "kernel2", to_string(c.kernel2) },
    { "kernel3", to_string(c.kernel3) },
    { "kernel4", to_string(c.kernel4) },
    { "quadrature",
      { { "half_width", optional_json(c.quadrature.half_width) },
        { "nodes", c.quadrature.nodes },
        { "floor", c.quadrature.floor },
        { "max_excluded", c.quadrature.max_excluded },
        { "imaginary_tolerance", c.quadrature.imaginary_tolerance } } },
    { "noise_model", to_string(c.noise_model) },
    { "inversion", to_string(c.inversion) },
    { "cutoff_constant", c.cutoff_constant },
    { "leave_one_out_variance", c.leave_one_out_variance },
    { "theta_rule", to_string(c.theta_rule) },
    { "theta_tolerance", c.theta_tolerance },
    { "theta_z", c.theta_z },
    { "theta_replications", c.theta_replications },
    { "bootstrap",
      { { "replications", c.bootstrap.replications },
        { "seed", c.bootstrap.seed },
        { "threads", c.bootstrap.threads } } },
    { "bunch_match_tolerance", c.bunch_match_tolerance },
  };
}

EstimationConfig config_from_json(const json& doc, const EstimationConfig& base)
{
  if (!doc.is_object())
    fail(ErrorKind::input, "invalid_config", "configuration must be a JSON object");
  EstimationConfig c = base;
  try {
    reject_unknown(doc,
                   { "h1", "h2", "h3", "h4", "h_mean", "h_interior", "kernel1", "kernel2",
                     "kernel3", "kernel4", "quadrature", "noise_model", "inversion",
                     "cutoff_constant", "leave_one_out_variance", "theta_rule",
                     "theta_tolerance", "theta_z", "theta_replications", "bootstrap",
                     "bunch_match_tolerance" },
                   "configuration");
    read(doc, "h1", c.h1);
    read(doc, "h2", c.h2);
    read(doc, "h3", c.h3);
    read(doc, "h4", c.h4);
    read(doc, "h_mean", c.h_mean);
    read(doc, "h_interior", c.h_interior);
    auto kernel = [&](const char* key, KernelKind& out) {
      if (doc.contains(key))
        out = kernel_from_string(doc.at(key).get<std::string>());
    };
    kernel("kernel1", c.kernel1);
    kernel("kernel2", c.kernel2);
    kernel("kernel3", c.kernel3);
    kernel("kernel4", c.kernel4);
    if (doc.contains("quadrature")) {
      const auto& q = doc.at("quadrature");
      reject_unknown(q, { "half_width", "nodes", "floor", "max_excluded", "imaginary_tolerance" },
                     "quadrature");
      read(q, "half_width", c.quadrature.half_width);
      read(q, "nodes", c.quadrature.nodes);
      read(q, "floor", c.quadrature.floor);
      read(q, "max_excluded", c.quadrature.max_excluded);
      read(q, "imaginary_tolerance", c.quadrature.imaginary_tolerance);
    }
    if (doc.contains("noise_model"))
      c.noise_model = noise_model_from_string(doc.at("noise_model").get<std::string>());
    if (doc.contains("inversion"))
      c.inversion = inversion_mode_from_string(doc.at("inversion").get<std::string>());
    read(doc, "cutoff_constant", c.cutoff_constant);
    read(doc, "leave_one_out_variance", c.leave_one_out_variance);
    if (doc.contains("theta_rule"))
      c.theta_rule = theta_rule_from_string(doc.at("theta_rule").get<std::string>());
    read(doc, "theta_tolerance", c.theta_tolerance);
    read(doc, "theta_z", c.theta_z);
    read(doc, "theta_replications", c.theta_replications);
    if (doc.contains("bootstrap")) {
      const auto& b = doc.at("bootstrap");
      reject_unknown(b, { "replications", "seed", "threads" }, "bootstrap");
      read(b, "replications", c.bootstrap.replications);
      read(b, "seed", c.bootstrap.seed);
      read(b, "threads", c.bootstrap.threads);
    }
    read(doc, "bunch_match_tolerance", c.bunch_match_tolerance);
  } catch (const json::exception& e) {
    fail(ErrorKind::input, "invalid_config", std::string("configuration: ") + e.what());
  }
  validate(c);
  return c;
}

std::string config_hash(const EstimationConfig& config)
{
  const std::string text = to_json(config).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string_view to_string(NoiseModel model)
{
  return model == NoiseModel::normal_plugin ? "normal_plugin" : "nonparametric";
}

std::string_view to_string(InversionMode mode)
{
  return mode == InversionMode::symmetric ? "symmetric" : "one_sided";
}

std::string_view to_string(ThetaRule rule)
{
  return rule == ThetaRule::bootstrap ? "bootstrap" : "fixed";
}

NoiseModel noise_model_from_string(std::string_view name)
{
  if (name == "nonparametric")
    return NoiseModel::nonparametric;
  if (name == "normal_plugin")
    return NoiseModel::normal_plugin;
  fail(ErrorKind::input, "invalid_config", "unknown noise model '" + std::string(name) + "'");
}

InversionMode inversion_mode_from_string(std::string_view name)
{
  if (name == "symmetric")
    return InversionMode::symmetric;
  if (name == "one_sided")
    return InversionMode::one_sided;
  fail(ErrorKind::input, "invalid_config", "unknown inversion mode '" + std::string(name) + "'");
}

ThetaRule theta_rule_from_string(std::string_view name)
{
  if (name == "fixed")
    return ThetaRule::fixed;
  if (name == "bootstrap")
    return ThetaRule::bootstrap;
  fail(ErrorKind::input, "invalid_config", "unknown theta rule '" + std::string(name) + "'");
}

} // namespace bunching
