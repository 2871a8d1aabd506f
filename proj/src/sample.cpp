#include "bunching/sample.hpp"

#include "bunching/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace bunching {

Sample::Sample(std::vector<double> treatment,
               std::vector<double> outcome,
               double bunch_point,
               std::vector<ControlColumn> controls,
               std::vector<double> weights)
  : treatment_(std::move(treatment))
  , outcome_(std::move(outcome))
  , controls_(std::move(controls))
  , weights_(std::move(weights))
  , bunch_point_(bunch_point)
{
  if (treatment_.size() != outcome_.size())
    fail(ErrorKind::input, "length_mismatch",
         "treatment and outcome lengths differ");
  if (treatment_.empty())
    fail(ErrorKind::input, "empty_sample", "sample has no observations");
  if (!std::isfinite(bunch_point_))
    fail(ErrorKind::input, "bad_bunch_point", "bunching point is not finite");
  for (std::size_t i = 0; i < treatment_.size(); ++i)
    if (!std::isfinite(treatment_[i]) || !std::isfinite(outcome_[i]))
      fail(ErrorKind::input, "non_finite_value",
           "non-finite value in row " + std::to_string(i));
  for (const auto& c : controls_)
    if (c.values.size() != treatment_.size())
      fail(ErrorKind::input, "length_mismatch",
           "control column '" + c.name + "' has the wrong length");
  if (!weights_.empty()) {
    if (weights_.size() != treatment_.size())
      fail(ErrorKind::input, "length_mismatch", "weight vector has the wrong length");
    for (double w : weights_)
      if (!(w >= 0.0) || !std::isfinite(w))
        fail(ErrorKind::input, "bad_weight", "weights must be finite and nonnegative");
  }
}

const ControlColumn& Sample::control(std::string_view name) const
{
  for (const auto& c : controls_)
    if (c.name == name)
      return c;
  fail(ErrorKind::input, "missing_column",
       "no control column named '" + std::string(name) + "'");
}

double Sample::total_weight() const
{
  if (weights_.empty())
    return static_cast<double>(size());
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

std::size_t Sample::bunched_count() const
{
  return static_cast<std::size_t>(std::count(treatment_.begin(), treatment_.end(), bunch_point_));
}

std::size_t Sample::above_count() const
{
  return static_cast<std::size_t>(std::count_if(
    treatment_.begin(), treatment_.end(), [&](double x) { return x > bunch_point_; }));
}

double Sample::bunch_mass() const
{
  double at = 0.0, all = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const double w = weight(i);
    all += w;
    if (is_bunched(i))
      at += w;
  }
  return all > 0.0 ? at / all : 0.0;
}

Sample Sample::subset(std::span<const std::size_t> rows) const
{
  auto pick = [&](const std::vector<double>& v) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (auto r : rows)
      out.push_back(v.at(r));
    return out;
  };
  std::vector<ControlColumn> controls;
  controls.reserve(controls_.size());
  for (const auto& c : controls_)
    controls.push_back({ c.name, c.kind, pick(c.values) });
  return Sample(pick(treatment_), pick(outcome_), bunch_point_, std::move(controls),
                weights_.empty() ? std::vector<double>{} : pick(weights_));
}

Sample Sample::with_weights(std::vector<double> weights) const
{
  return Sample(treatment_, outcome_, bunch_point_, controls_, std::move(weights));
}

Sample Sample::with_outcome(std::vector<double> outcome) const
{
  return Sample(treatment_, std::move(outcome), bunch_point_, controls_, weights_);
}

Sample Sample::with_treatment(std::vector<double> treatment, double bunch_point) const
{
  return Sample(std::move(treatment), outcome_, bunch_point, controls_, weights_);
}

void check_estimable(const Sample& sample)
{
  bool bunched = false, above = false;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double x = sample.treatment()[i];
    if (x < sample.bunch_point())
      fail(ErrorKind::input, "below_bunch_point",
           "row " + std::to_string(i) +
             " lies below the bunching point; reorient the sample first");
    if (sample.weight(i) > 0.0) {
      bunched = bunched || x == sample.bunch_point();
      above = above || x > sample.bunch_point();
    }
  }
  if (!bunched)
    fail(ErrorKind::input, "no_bunched_rows", "no observation at the bunching point");
  if (!above)
    fail(ErrorKind::input, "no_above_rows", "no observation above the bunching point");
}

std::string_view to_string(BoundarySide side)
{
  switch (side) {
    case BoundarySide::left_boundary:
      return "left_boundary";
    case BoundarySide::right_boundary:
      return "right_boundary";
    case BoundarySide::interior_above:
      return "interior_above";
    case BoundarySide::interior_below:
      return "interior_below";
  }
  return "unknown";
}

BoundarySide boundary_side_from_string(std::string_view name)
{
  for (auto s : { BoundarySide::left_boundary, BoundarySide::right_boundary,
                  BoundarySide::interior_above, BoundarySide::interior_below })
    if (to_string(s) == name)
      return s;
  fail(ErrorKind::input, "unknown_side", "unknown boundary side '" + std::string(name) + "'");
}

Sample reorient(const Sample& sample, BoundarySide side)
{
  const double xb = sample.bunch_point();
  const auto& x = sample.treatment();
  std::vector<std::size_t> keep;
  bool reflect = false;
  switch (side) {
    case BoundarySide::left_boundary:
      return sample;
    case BoundarySide::right_boundary:
      keep.resize(sample.size());
      std::iota(keep.begin(), keep.end(), std::size_t{ 0 });
      reflect = true;
      break;
    case BoundarySide::interior_above:
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] >= xb)
          keep.push_back(i);
      break;
    case BoundarySide::interior_below:
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] <= xb)
          keep.push_back(i);
      reflect = true;
      break;
  }
  const bool has_side = std::any_of(keep.begin(), keep.end(), [&](std::size_t i) {
    return reflect ? x[i] < xb : x[i] > xb;
  });
  // A right boundary is a pure reflection, so it composes to the identity.
  if (keep.empty() || (side != BoundarySide::right_boundary && !has_side))
    fail(ErrorKind::input, "empty_side",
         "no observations on the " + std::string(to_string(side)) + " side");
  Sample kept = keep.size() == sample.size() ? sample : sample.subset(keep);
  if (!reflect)
    return kept;
  std::vector<double> mirrored = kept.treatment();
  for (double& v : mirrored)
    v = v == xb ? xb : 2.0 * xb - v;
  return kept.with_treatment(std::move(mirrored), xb);
}

namespace {

// Parses delimited text with RFC 4180 quoting into rows of fields.
std::vector<std::vector<std::string>> parse_delimited(const std::string& text, char delim)
{
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, row_open = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      row_open = true;
    } else if (c == delim) {
      row.push_back(std::move(field));
      field.clear();
      row_open = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n')
        ++i;
      if (row_open || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      row_open = false;
    } else {
      field.push_back(c);
      row_open = true;
    }
  }
  if (quoted)
    fail(ErrorKind::input, "unterminated_quote", "unterminated quoted field");
  if (row_open || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  return s;
}

bool is_missing(std::string_view s)
{
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "." ||
         s == "null";
}

std::size_t resolve_column(const ColumnRef& ref, const std::vector<std::string>& header)
{
  if (const auto* idx = std::get_if<std::size_t>(&ref)) {
    if (*idx >= header.size())
      fail(ErrorKind::input, "missing_column",
           "column index " + std::to_string(*idx) + " is out of range");
    return *idx;
  }
  const auto& name = std::get<std::string>(ref);
  for (std::size_t j = 0; j < header.size(); ++j)
    if (trim(header[j]) == name)
      return j;
  fail(ErrorKind::input, "missing_column", "column '" + name + "' not found in header");
}

std::string column_name(const ColumnRef& ref, const std::vector<std::string>& header)
{
  return std::string(trim(header[resolve_column(ref, header)]));
}

} // namespace

LoadResult load_sample(const std::filesystem::path& path, const LoadOptions& options)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorKind::input, "file_not_found", "cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0)
    text.erase(0, 3);

  auto rows = parse_delimited(text, options.delimiter);
  if (rows.empty())
    fail(ErrorKind::input, "empty_file", "file has no header row");
  const auto& header = rows.front();
  const std::size_t jx = resolve_column(options.x, header);
  const std::size_t jy = resolve_column(options.y, header);
  std::vector<std::size_t> jc;
  std::vector<ControlColumn> controls;
  for (const auto& spec : options.controls) {
    jc.push_back(resolve_column(spec.column, header));
    controls.push_back({ column_name(spec.column, header), spec.kind, {} });
  }

  LoadResult result;
  std::vector<double> xs, ys;
  std::vector<double> cells(2 + jc.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    ++result.rows_read;
    bool missing = false;
    auto read_cell = [&](std::size_t j, double& out) {
      std::string_view cell = j < row.size() ? trim(row[j]) : std::string_view{};
      if (is_missing(cell)) {
        missing = true;
        return;
      }
      if (cell.front() == '+')
        cell.remove_prefix(1);
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(out))
        fail(ErrorKind::input, "non_numeric_cell",
             "non-numeric value '" + std::string(cell) + "' in data row " +
               std::to_string(r) + ", column '" + std::string(trim(header[j])) + "'");
    };
    read_cell(jx, cells[0]);
    read_cell(jy, cells[1]);
    for (std::size_t k = 0; k < jc.size(); ++k)
      read_cell(jc[k], cells[2 + k]);
    if (missing) {
      ++result.rows_dropped;
      continue;
    }
    double x = cells[0];
    if (x != options.bunch_point && std::abs(x - options.bunch_point) <= options.match_tolerance) {
      x = options.bunch_point;
      ++result.rows_snapped;
    }
    xs.push_back(x);
    ys.push_back(cells[1]);
    for (std::size_t k = 0; k < jc.size(); ++k)
      controls[k].values.push_back(cells[2 + k]);
  }
  if (xs.empty())
    fail(ErrorKind::input, "empty_sample", "no complete rows in '" + path.string() + "'");
  Sample raw(std::move(xs), std::move(ys), options.bunch_point, std::move(controls));
  result.sample = reorient(raw, options.side);
  check_estimable(result.sample);
  return result;
}

std::string format_double(double value)
{
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_sample_csv(const Sample& sample, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorKind::input, "cannot_write", "cannot write '" + path.string() + "'");
  out << "x,y";
  for (const auto& c : sample.controls())
    out << ',' << c.name;
  out << '\n';
  for (std::size_t i = 0; i < sample.size(); ++i) {
    out << format_double(sample.treatment()[i]) << ',' << format_double(sample.outcome()[i]);
    for (const auto& c : sample.controls())
      out << ',' << format_double(c.values[i]);
    out << '\n';
  }
  if (!out)
    fail(ErrorKind::input, "cannot_write", "write failed for '" + path.string() + "'");
}

} // namespace bunching
