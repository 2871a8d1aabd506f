#include "bunching/bootstrap.hpp"

#include "bunching/error.hpp"
#include "bunching/stats.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <thread>

namespace bunching {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

} // namespace

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t index)
{
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x51ED270B27ull));
}

std::vector<std::size_t> resample_rows(std::size_t n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows)
    r = pick(rng);
  return rows;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body)
{
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      body(i);
    return;
  }
  std::atomic<std::size_t> next{ 0 };
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error)
          first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t)
    pool.emplace_back(run);
  for (auto& t : pool)
    t.join();
  if (first_error)
    std::rethrow_exception(first_error);
}

BootstrapResult bootstrap(const Sample& sample,
                          const BootstrapTarget& target,
                          int replications,
                          std::uint64_t seed,
                          int threads)
{
  if (replications < 2)
    fail(ErrorKind::input, "invalid_config", "bootstrap needs at least 2 replications");
  const auto count = static_cast<std::size_t>(replications);
  std::vector<std::optional<std::vector<double>>> slots(count);
  parallel_for(count, threads, [&](std::size_t b) {
    const auto rows = resample_rows(sample.size(), replicate_seed(seed, b));
    try {
      slots[b] = target(sample.subset(rows));
    } catch (const Error&) {
      slots[b].reset(); // degenerate resample
    }
  });

  BootstrapResult out;
  out.requested = replications;
  for (auto& s : slots) {
    if (s)
      out.replicates.push_back(std::move(*s));
    else
      ++out.failed;
  }
  if (out.failed * 10 > replications)
    fail(ErrorKind::unreliable, "bootstrap_unreliable",
         std::to_string(out.failed) + " of " + std::to_string(replications) +
           " bootstrap replicates failed; inference is unreliable");
  if (out.replicates.size() < 2)
    fail(ErrorKind::unreliable, "bootstrap_unreliable", "fewer than two successful replicates");

  const std::size_t dim = out.replicates.front().size();
  for (std::size_t j = 0; j < dim; ++j) {
    std::vector<double> column;
    column.reserve(out.replicates.size());
    for (const auto& r : out.replicates)
      column.push_back(r.at(j));
    out.se.push_back(stats::stddev(column));
    std::sort(column.begin(), column.end());
    out.ci.push_back({ stats::quantile_sorted(column, 0.025), stats::quantile_sorted(column, 0.975) });
  }
  return out;
}

} // namespace bunching
