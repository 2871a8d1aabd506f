#pragma once

#include "bunching/config.hpp"
#include "bunching/error.hpp"
#include "bunching/estimates.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace bunching {

struct Provenance
{
  std::string version;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::optional<std::string> input;
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::size_t rows_snapped = 0;
  std::string command;
  std::string simd_backend;
};

//! Fills version, seed, config hash and active SIMD backend.
Provenance make_provenance(const EstimationConfig& config, std::string command);

struct Report
{
  Provenance provenance;
  EstimationConfig config;
  std::vector<AmeEstimate> ame; // one entry per bandwidth in a sweep
  std::vector<AttEstimate> att; // sorted by x on emission
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const AmeEstimate& estimate);
nlohmann::json to_json(const AttEstimate& estimate);
AmeEstimate ame_from_json(const nlohmann::json& doc);
AttEstimate att_from_json(const nlohmann::json& doc);

//! Keys are emitted in sorted order, so equal reports give equal bytes.
nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& doc);
std::string emit_report(const Report& report);

nlohmann::json error_json(const Error& error);
std::string emit_error(const Error& error);

} // namespace bunching
