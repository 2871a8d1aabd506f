#include "bunching/report.hpp"

#include "bunching/simd/dispatch.hpp"
#include "bunching/version.hpp"

#include <algorithm>

namespace bunching {

using nlohmann::json;

namespace {

template<typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v)
{
  if (v)
    j[key] = *v;
}

template<typename T>
std::optional<T> get_optional(const json& j, const char* key)
{
  if (j.contains(key) && !j.at(key).is_null())
    return j.at(key).get<T>();
  return std::nullopt;
}

json interval_json(const Interval& ci)
{
  return { { "lo", ci.lo }, { "hi", ci.hi } };
}

std::optional<Interval> interval_from_json(const json& j, const char* key)
{
  if (!j.contains(key))
    return std::nullopt;
  return Interval{ j.at(key).at("lo").get<double>(), j.at(key).at("hi").get<double>() };
}

json selection_json(const SelectionDensity& s)
{
  return {
    { "value_at_zero", s.value_at_zero },
    { "log_derivative_at_zero", s.log_derivative_at_zero },
    { "imaginary_residual", s.imaginary_residual },
    { "unstable", s.unstable },
    { "mode", to_string(s.mode) },
    { "support_side", s.support_side },
    { "cutoff", s.cutoff },
    { "h4", s.h4 },
    { "excluded_fraction", s.excluded_fraction },
    { "grid_points", s.grid_points },
    { "warnings", s.warnings },
  };
}

SelectionDensity selection_from_json(const json& j)
{
  SelectionDensity s;
  s.value_at_zero = j.at("value_at_zero").get<double>();
  s.log_derivative_at_zero = j.at("log_derivative_at_zero").get<double>();
  s.imaginary_residual = j.at("imaginary_residual").get<double>();
  s.unstable = j.at("unstable").get<bool>();
  s.mode = inversion_mode_from_string(j.at("mode").get<std::string>());
  s.support_side = j.at("support_side").get<int>();
  s.cutoff = j.at("cutoff").get<double>();
  s.h4 = j.at("h4").get<double>();
  s.excluded_fraction = j.at("excluded_fraction").get<double>();
  s.grid_points = j.at("grid_points").get<std::size_t>();
  s.warnings = j.at("warnings").get<std::vector<std::string>>();
  return s;
}

json provenance_json(const Provenance& p)
{
  json j = {
    { "version", p.version },
    { "seed", p.seed },
    { "config_hash", p.config_hash },
    { "rows_read", p.rows_read },
    { "rows_dropped", p.rows_dropped },
    { "rows_snapped", p.rows_snapped },
    { "command", p.command },
    { "simd_backend", p.simd_backend },
  };
  j["input"] = p.input ? json(*p.input) : json(nullptr);
  return j;
}

Provenance provenance_from_json(const json& j)
{
  Provenance p;
  p.version = j.at("version").get<std::string>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.config_hash = j.at("config_hash").get<std::string>();
  p.input = get_optional<std::string>(j, "input");
  p.rows_read = j.at("rows_read").get<std::size_t>();
  p.rows_dropped = j.at("rows_dropped").get<std::size_t>();
  p.rows_snapped = j.at("rows_snapped").get<std::size_t>();
  p.command = j.at("command").get<std::string>();
  p.simd_backend = j.at("simd_backend").get<std::string>();
  return p;
}

} // namespace

Provenance make_provenance(const EstimationConfig& config, std::string command)
{
  Provenance p;
  p.version = std::string(version);
  p.seed = config.bootstrap.seed;
  p.config_hash = config_hash(config);
  p.command = std::move(command);
  p.simd_backend = std::string(simd::to_string(simd::active_backend()));
  return p;
}

json to_json(const AmeEstimate& e)
{
  json j = {
    { "ame", e.ame },
    { "m_slope", e.m_slope },
    { "theta", e.theta },
    { "gap", e.gap },
    { "theta_tolerance", e.theta_tolerance },
    { "boundary_mean", e.boundary_mean },
    { "bunched_mean", e.bunched_mean },
    { "f_x_boundary", e.f_x_boundary },
    { "f_x_log_slope", e.f_x_log_slope },
    { "f_x_boundary_derivative", e.f_x_boundary * e.f_x_log_slope },
    { "bunch_mass", e.bunch_mass },
    { "s_prime", e.s_prime },
    { "bandwidths", { { "h1", e.h1 }, { "h2", e.h2 }, { "h3", e.h3 }, { "h_mean", e.h_mean } } },
    { "bootstrap", { { "replications", e.bootstrap_replications }, { "failed", e.bootstrap_failed } } },
    { "warnings", e.warnings },
  };
  if (e.theta != 0) {
    put_optional(j, "selection_density_at_zero", e.selection_density_at_zero);
    put_optional(j, "selection_log_derivative", e.selection_log_derivative);
    if (e.selection)
      j["selection"] = selection_json(*e.selection);
    put_optional(j, "boundary_variance", e.boundary_variance);
  }
  put_optional(j, "se", e.se);
  if (e.ci)
    j["ci"] = interval_json(*e.ci);
  return j;
}

AmeEstimate ame_from_json(const json& j)
{
  AmeEstimate e;
  e.ame = j.at("ame").get<double>();
  e.m_slope = j.at("m_slope").get<double>();
  e.theta = j.at("theta").get<int>();
  e.gap = j.at("gap").get<double>();
  e.theta_tolerance = j.at("theta_tolerance").get<double>();
  e.boundary_mean = j.at("boundary_mean").get<double>();
  e.bunched_mean = j.at("bunched_mean").get<double>();
  e.f_x_boundary = j.at("f_x_boundary").get<double>();
  e.f_x_log_slope = j.at("f_x_log_slope").get<double>();
  e.bunch_mass = j.at("bunch_mass").get<double>();
  e.s_prime = j.at("s_prime").get<double>();
  const auto& bw = j.at("bandwidths");
  e.h1 = bw.at("h1").get<double>();
  e.h2 = bw.at("h2").get<double>();
  e.h3 = bw.at("h3").get<double>();
  e.h_mean = bw.at("h_mean").get<double>();
  e.bootstrap_replications = j.at("bootstrap").at("replications").get<int>();
  e.bootstrap_failed = j.at("bootstrap").at("failed").get<int>();
  e.warnings = j.at("warnings").get<std::vector<std::string>>();
  e.selection_density_at_zero = get_optional<double>(j, "selection_density_at_zero");
  e.selection_log_derivative = get_optional<double>(j, "selection_log_derivative");
  if (j.contains("selection"))
    e.selection = selection_from_json(j.at("selection"));
  e.boundary_variance = get_optional<double>(j, "boundary_variance");
  e.se = get_optional<double>(j, "se");
  e.ci = interval_from_json(j, "ci");
  return e;
}

json to_json(const AttEstimate& e)
{
  json j = {
    { "x", e.x },
    { "degree", e.degree },
    { "att", e.att },
    { "m_at_x", e.m_at_x },
    { "correction_terms", e.correction_terms },
  };
  put_optional(j, "se", e.se);
  if (e.ci)
    j["ci"] = interval_json(*e.ci);
  return j;
}

AttEstimate att_from_json(const json& j)
{
  AttEstimate e;
  e.x = j.at("x").get<double>();
  e.degree = j.at("degree").get<int>();
  e.att = j.at("att").get<double>();
  e.m_at_x = j.at("m_at_x").get<double>();
  e.correction_terms = j.at("correction_terms").get<std::vector<double>>();
  e.se = get_optional<double>(j, "se");
  e.ci = interval_from_json(j, "ci");
  return e;
}

json to_json(const Report& r)
{
  json ame = json::array();
  for (const auto& e : r.ame)
    ame.push_back(to_json(e));
  auto sorted = r.att;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const AttEstimate& a, const AttEstimate& b) { return a.x < b.x; });
  json att = json::array();
  for (const auto& e : sorted)
    att.push_back(to_json(e));
  return {
    { "schema_version", report_schema_version },
    { "software", { { "name", "bunching" }, { "version", r.provenance.version } } },
    { "provenance", provenance_json(r.provenance) },
    { "config", to_json(r.config) },
    { "ame", std::move(ame) },
    { "att", std::move(att) },
    { "warnings", r.warnings },
  };
}

Report report_from_json(const json& doc)
{
  try {
    if (doc.contains("error"))
      fail(ErrorKind::input, "error_report", "document is an error report");
    if (doc.at("schema_version").get<int>() != report_schema_version)
      fail(ErrorKind::input, "schema_version", "unsupported report schema version");
    Report r;
    r.provenance = provenance_from_json(doc.at("provenance"));
    r.config = config_from_json(doc.at("config"));
    for (const auto& e : doc.at("ame"))
      r.ame.push_back(ame_from_json(e));
    for (const auto& e : doc.at("att"))
      r.att.push_back(att_from_json(e));
    r.warnings = doc.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::input, "malformed_report", std::string("report: ") + e.what());
  }
}

std::string emit_report(const Report& report)
{
  return to_json(report).dump(2) + "\n";
}

json error_json(const Error& error)
{
  return { { "schema_version", report_schema_version },
           { "error",
             { { "kind", to_string(error.kind()) }, { "code", error.code() }, { "message", error.what() } } } };
}

std::string emit_error(const Error& error)
{
  return error_json(error).dump(2) + "\n";
}

} // namespace bunching
