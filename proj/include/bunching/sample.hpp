#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bunching {

enum class ControlKind
{
  continuous,
  discrete
};

struct ControlColumn
{
  std::string name;
  ControlKind kind = ControlKind::continuous;
  std::vector<double> values;
};

//! Observed microdata with a declared bunching point.
//!
//! Immutable after construction. Optional nonnegative observation weights are
//! carried for kernel-weighted estimation; an empty weight vector means unit
//! weights.
class Sample
{
public:
  Sample() = default;
  Sample(std::vector<double> treatment,
         std::vector<double> outcome,
         double bunch_point,
         std::vector<ControlColumn> controls = {},
         std::vector<double> weights = {});

  std::size_t size() const { return treatment_.size(); }
  double bunch_point() const { return bunch_point_; }
  const std::vector<double>& treatment() const { return treatment_; }
  const std::vector<double>& outcome() const { return outcome_; }
  const std::vector<ControlColumn>& controls() const { return controls_; }
  const ControlColumn& control(std::string_view name) const;

  bool weighted() const { return !weights_.empty(); }
  const std::vector<double>& weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_.empty() ? 1.0 : weights_[i]; }
  double total_weight() const;

  bool is_bunched(std::size_t i) const { return treatment_[i] == bunch_point_; }
  bool is_above(std::size_t i) const { return treatment_[i] > bunch_point_; }
  std::size_t bunched_count() const;
  std::size_t above_count() const;
  //! Weighted share of observations at the bunching point.
  double bunch_mass() const;

  //! Rows in the given order; indices may repeat (bootstrap resampling).
  Sample subset(std::span<const std::size_t> rows) const;
  Sample with_weights(std::vector<double> weights) const;
  Sample with_outcome(std::vector<double> outcome) const;
  Sample with_treatment(std::vector<double> treatment, double bunch_point) const;

private:
  std::vector<double> treatment_;
  std::vector<double> outcome_;
  std::vector<ControlColumn> controls_;
  std::vector<double> weights_;
  double bunch_point_ = 0.0;
};

//! Throws an input error unless the sample has bunched and above-bunch rows
//! and no row lies below the bunching point.
void check_estimable(const Sample& sample);

enum class BoundarySide
{
  left_boundary,
  right_boundary,
  interior_above,
  interior_below
};

std::string_view to_string(BoundarySide side);
BoundarySide boundary_side_from_string(std::string_view name);

//! Maps a sample to canonical orientation, with all mass at or above the
//! bunching point. Mass below is reflected through the bunching point.
Sample reorient(const Sample& sample, BoundarySide side);

using ColumnRef = std::variant<std::string, std::size_t>;

struct ControlSpec
{
  ColumnRef column;
  ControlKind kind = ControlKind::continuous;
};

struct LoadOptions
{
  ColumnRef x = std::string("x");
  ColumnRef y = std::string("y");
  std::vector<ControlSpec> controls;
  double bunch_point = 0.0;
  double match_tolerance = 0.0;
  char delimiter = ',';
  BoundarySide side = BoundarySide::left_boundary;
};

struct LoadResult
{
  Sample sample;
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0; // missing x, y or control value
  std::size_t rows_snapped = 0; // treatment moved onto the bunching point
};

LoadResult load_sample(const std::filesystem::path& path, const LoadOptions& options);

//! Writes x, y and control columns with shortest round-trip formatting.
void write_sample_csv(const Sample& sample, const std::filesystem::path& path);

//! Shortest decimal form that parses back to the same double.
std::string format_double(double value);

} // namespace bunching
