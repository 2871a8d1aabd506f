#include "bunching/controls.hpp"

#include "bunching/error.hpp"
#include "bunching/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace bunching {

namespace {

constexpr int kmeans_iterations = 100;
constexpr int kmeans_retries = 5;

std::vector<const ControlColumn*> select_columns(const Sample& sample,
                                                 const std::vector<std::string>& names,
                                                 bool continuous_only)
{
  std::vector<const ControlColumn*> out;
  if (names.empty()) {
    for (const auto& c : sample.controls())
      if (!continuous_only || c.kind == ControlKind::continuous)
        out.push_back(&c);
  } else {
    for (const auto& n : names)
      out.push_back(&sample.control(n));
  }
  if (continuous_only)
    for (const auto* c : out)
      if (c->kind != ControlKind::continuous)
        fail(ErrorKind::input, "discrete_control",
             "kernel weighting needs continuous controls; '" + c->name + "' is discrete");
  if (out.empty())
    fail(ErrorKind::input, "missing_column", "no control columns selected");
  return out;
}

// Feature matrix (row-major) for clustering.
std::vector<double> cluster_features(const Sample& sample,
                                     const std::vector<const ControlColumn*>& cols,
                                     std::size_t& dim)
{
  const std::size_t n = sample.size();
  std::vector<std::vector<double>> features;
  for (const auto* c : cols) {
    if (c->kind == ControlKind::continuous) {
      double mean = 0.0;
      for (double v : c->values)
        mean += v;
      mean /= static_cast<double>(n);
      double ss = 0.0;
      for (double v : c->values)
        ss += (v - mean) * (v - mean);
      const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
      std::vector<double> f(n, 0.0);
      if (sd > 0.0)
        for (std::size_t i = 0; i < n; ++i)
          f[i] = (c->values[i] - mean) / sd;
      features.push_back(std::move(f));
    } else {
      // One-hot scaled so that a level mismatch adds 1 to the squared distance.
      std::set<double> levels(c->values.begin(), c->values.end());
      const double scale = 1.0 / std::sqrt(2.0);
      for (double level : levels) {
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i)
          f[i] = c->values[i] == level ? scale : 0.0;
        features.push_back(std::move(f));
      }
    }
  }
  dim = features.size();
  std::vector<double> x(n * dim);
  for (std::size_t j = 0; j < dim; ++j)
    for (std::size_t i = 0; i < n; ++i)
      x[i * dim + j] = features[j][i];
  return x;
}

double squared_distance(const double* a, const double* b, std::size_t dim)
{
  double s = 0.0;
  for (std::size_t j = 0; j < dim; ++j)
    s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

// Lloyd iterations from k-means++ seeds; empty result when a cluster empties.
std::optional<std::vector<std::int64_t>> kmeans(const std::vector<double>& x,
                                                std::size_t n,
                                                std::size_t dim,
                                                std::size_t k,
                                                std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::vector<double> centers(k * dim);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t pick = first(rng);
  for (std::size_t c = 0; c < k; ++c) {
    std::copy_n(&x[pick * dim], dim, &centers[c * dim]);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(&x[i * dim], &centers[c * dim], dim));
      total += nearest[i];
    }
    if (c + 1 == k)
      break;
    if (!(total > 0.0))
      return std::nullopt; // fewer distinct points than clusters
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng), acc = 0.0;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += nearest[i];
      if (acc >= target) {
        pick = i;
        break;
      }
    }
  }

  std::vector<std::int64_t> labels(n, -1);
  for (int it = 0; it < kmeans_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::int64_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(&x[i * dim], &centers[c * dim], dim);
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::int64_t>(c);
        }
      }
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }
    std::vector<double> sums(k * dim, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(labels[i]);
      ++counts[c];
      for (std::size_t j = 0; j < dim; ++j)
        sums[c * dim + j] += x[i * dim + j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0)
        return std::nullopt;
      for (std::size_t j = 0; j < dim; ++j)
        centers[c * dim + j] = sums[c * dim + j] / static_cast<double>(counts[c]);
    }
    if (!changed)
      break;
  }
  return labels;
}

} // namespace

StrataAssignment assign_strata(const Sample& sample, std::vector<std::int64_t> labels)
{
  if (labels.size() != sample.size())
    fail(ErrorKind::input, "length_mismatch", "one stratum label per observation is required");
  StrataAssignment out;
  double bunched_total = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    out.weights.try_emplace(labels[i], 0.0);
    if (sample.is_bunched(i)) {
      out.weights[labels[i]] += sample.weight(i);
      bunched_total += sample.weight(i);
    }
  }
  if (!(bunched_total > 0.0))
    fail(ErrorKind::input, "no_bunched_rows", "no observation at the bunching point");
  for (auto& [label, w] : out.weights) {
    w /= bunched_total;
    if (w > 0.0)
      out.kept.push_back(label);
  }
  out.labels = std::move(labels);
  return out;
}

StrataAssignment strata_from_control(const Sample& sample, std::string_view column)
{
  const auto& c = sample.control(column);
  std::vector<std::int64_t> labels(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i)
    labels[i] = std::llround(c.values[i]);
  return assign_strata(sample, std::move(labels));
}

StratifiedAme stratified_ame(const Sample& sample,
                             const StrataAssignment& strata,
                             const EstimationConfig& config)
{
  if (strata.labels.size() != sample.size())
    fail(ErrorKind::input, "length_mismatch", "strata do not match the sample");
  StratifiedAme out;
  double weighted = 0.0;
  for (const auto& [label, weight] : strata.weights) {
    StratumResult r;
    r.label = label;
    r.weight = weight;
    if (!(weight > 0.0)) {
      r.skipped = "no bunched observations";
      out.strata.push_back(std::move(r));
      continue;
    }
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < sample.size(); ++i)
      if (strata.labels[i] == label)
        rows.push_back(i);
    try {
      const Sample sub = rows.size() == sample.size() ? sample : sample.subset(rows);
      r.estimate = ame(sub, config);
      weighted += weight * r.estimate->ame;
      out.kept_weight += weight;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::unreliable)
        throw;
      r.skipped = e.code() + ": " + e.what();
    }
    out.strata.push_back(std::move(r));
  }
  if (!(out.kept_weight > 0.0))
    fail(ErrorKind::degenerate, "no_estimable_stratum", "no stratum supports estimation");
  out.ame = weighted / out.kept_weight;
  return out;
}

std::vector<double> control_weights(const Sample& sample,
                                    const std::vector<std::string>& columns,
                                    const std::vector<double>& z0,
                                    const std::vector<double>& bandwidths,
                                    const std::vector<KernelKind>& kernels)
{
  const auto cols = select_columns(sample, columns, true);
  if (z0.size() != cols.size() || bandwidths.size() != cols.size() ||
      (kernels.size() != cols.size() && kernels.size() != 1))
    fail(ErrorKind::input, "length_mismatch",
         "control point, bandwidths and kernels must match the control columns");
  for (double b : bandwidths)
    if (!(b > 0.0))
      fail(ErrorKind::input, "invalid_bandwidth", "control bandwidths must be positive");
  std::vector<double> w(sample.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double v = sample.weight(i);
    for (std::size_t m = 0; m < cols.size() && v > 0.0; ++m) {
      const auto kind = kernels.size() == 1 ? kernels[0] : kernels[m];
      v *= kernel_eval(kind, (cols[m]->values[i] - z0[m]) / bandwidths[m]) / bandwidths[m];
    }
    w[i] = v;
    total += v;
  }
  if (!(total > 0.0))
    fail(ErrorKind::input, "no_weighted_mass", "no observation has positive control weight");
  for (double& v : w)
    v /= total;
  return w;
}

AmeEstimate kernel_weighted_ame(const Sample& sample,
                                const std::vector<std::string>& columns,
                                const std::vector<double>& z0,
                                const std::vector<double>& bandwidths,
                                const std::vector<KernelKind>& kernels,
                                const EstimationConfig& config)
{
  const auto w = control_weights(sample, columns, z0, bandwidths, kernels);
  std::vector<std::size_t> rows;
  double bunched = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i)
    if (w[i] > 0.0) {
      rows.push_back(i);
      if (sample.is_bunched(i))
        bunched += w[i];
    }
  if (!(bunched > 0.0))
    fail(ErrorKind::input, "no_weighted_bunching", "no weighted mass at the bunching point");
  std::vector<double> kept_w(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j)
    kept_w[j] = w[rows[j]];
  const Sample sub = sample.subset(rows).with_weights(std::move(kept_w));
  return ame(sub, config);
}

StrataAssignment cluster_controls(const Sample& sample,
                                  int clusters,
                                  std::uint64_t seed,
                                  const std::vector<std::string>& columns)
{
  if (clusters < 1)
    fail(ErrorKind::input, "invalid_argument", "cluster count must be at least 1");
  const std::size_t n = sample.size();
  const auto k = static_cast<std::size_t>(clusters);
  if (n < k)
    fail(ErrorKind::input, "invalid_argument", "fewer rows than clusters");
  if (k == 1)
    return assign_strata(sample, std::vector<std::int64_t>(n, 0));
  const auto cols = select_columns(sample, columns, false);
  std::size_t dim = 0;
  const auto x = cluster_features(sample, cols, dim);
  for (int attempt = 0; attempt < kmeans_retries; ++attempt) {
    if (auto labels = kmeans(x, n, dim, k, seed + static_cast<std::uint64_t>(attempt)))
      return assign_strata(sample, std::move(*labels));
  }
  fail(ErrorKind::degenerate, "empty_cluster",
       "clustering left an empty cluster after " + std::to_string(kmeans_retries) + " attempts");
}

} // namespace bunching
