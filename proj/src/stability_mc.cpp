#include "poolfund/stability_mc.hpp"

#include <algorithm>
#include <string>

#include "poolfund/errors.hpp"

namespace poolfund {

void StabilityParams::validate() const {
  if (!(eps_lower > 0.0 && eps_lower < 1.0)) throw InputError("eps1 must lie in (0,1)");
  if (!(eps_upper > 0.0)) throw InputError("eps2 must be > 0 (or infinite)");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InputError("beta must lie in [0,1]");
}

void sample_order_statistics(std::span<double> out, StreamRng& rng) {
  double total = 0.0;
  for (double& u : out) {
    total += rng.exponential();
    u = total;
  }
  total += rng.exponential();
  const double scale = 1.0 / total;
  for (double& u : out) u *= scale;
}

std::vector<double> sample_order_statistics(std::size_t n, StreamRng& rng) {
  std::vector<double> out(n);
  sample_order_statistics(out, rng);
  return out;
}

std::vector<double> assign_savings_to_deaths(const SavingsVector& savings, StreamRng& rng) {
  std::vector<double> order(savings.begin(), savings.end());
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    const std::size_t j = k + rng.below(order.size() - k);
    std::swap(order[k], order[j]);
  }
  return order;
}

namespace {

// Scan shared by the eager and the lazily-permuted paths. `next_savings(k)`
// yields the savings of the (k+1)-th death.
template <class NextSavings>
double scan_stop_time(std::span<const double> order_stats, double total_savings,
                      const StabilityParams& params, NextSavings next_savings) {
  const std::size_t n = order_stats.size();
  const double floor = 1.0 - params.eps_lower;
  const double ceiling = 1.0 + params.eps_upper;
  const bool check_upper = !params.upper_unbounded();
  double dead = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double here = k == 0 ? 0.0 : order_stats[k - 1];
    const double next = order_stats[k];
    const double experienced = (total_savings - dead) / total_savings;  // 1 - Fhat
    // The ratio jumps up at deaths and decays in between, so an upper breach
    // can only start at a death time and a lower breach only inside a gap.
    if (check_upper && (1.0 - here) > ceiling * experienced) return here;
    if ((1.0 - next) < floor * experienced) return 1.0 - floor * experienced;
    dead += next_savings(k);
  }
  // Everyone is dead: the ratio is infinite from the last death on.
  if (check_upper) return n == 0 ? 0.0 : order_stats[n - 1];
  return 1.0;
}

}  // namespace

double stop_time_tau(std::span<const double> order_stats,
                     std::span<const double> savings_by_death, const StabilityParams& params) {
  if (order_stats.size() != savings_by_death.size()) {
    throw InputError("order statistics and savings differ in length");
  }
  double total = 0.0;
  for (double s : savings_by_death) total += s;
  return scan_stop_time(order_stats, total, params,
                        [&](std::size_t k) { return savings_by_death[k]; });
}

std::vector<double> sample_stop_times(const SavingsVector& savings, const StabilityParams& params,
                                      std::size_t replications, std::uint64_t seed,
                                      unsigned workers) {
  params.validate();
  const std::size_t n = savings.size();
  const double total = savings.sum();
  const bool homogeneous = savings.min() == savings.max();
  std::vector<double> taus(replications);

  parallel_for(replications, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> order_stats(n);
    std::vector<double> order(n);
    for (std::size_t r = begin; r < end; ++r) {
      StreamRng rng(seed, r);
      sample_order_statistics(order_stats, rng);
      if (homogeneous) {
        const double amount = savings[0];
        taus[r] = scan_stop_time(order_stats, total, params, [amount](std::size_t) {
          return amount;
        });
        continue;
      }
      // Same draws as assign_savings_to_deaths, taken only as far as the scan goes.
      std::copy(savings.begin(), savings.end(), order.begin());
      taus[r] = scan_stop_time(order_stats, total, params, [&](std::size_t k) {
        if (k + 1 < n) std::swap(order[k], order[k + rng.below(n - k)]);
        return order[k];
      });
    }
  });
  return taus;
}

StabilityEstimate quantile_estimate(std::span<const double> stop_times, double beta) {
  const std::size_t r = stop_times.size();
  if (r == 0) throw InputError("no stop-time samples");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InputError("beta must lie in [0,1]");
  const double p = 1.0 - beta;
  const double position = p * static_cast<double>(r);
  // Guard the ceiling against representation error, e.g. (1-0.9)*1e6.
  const double rank = std::ceil(position - 1e-9 * std::max(1.0, position));
  if (rank < 1.0 || position < 1.0 - 1e-9) {
    throw DomainError("(1-beta) * replications = " + std::to_string(position) +
                      " < 1: the quantile is undefined; raise the replication count");
  }
  const auto k = static_cast<std::size_t>(rank);  // 1-based

  std::vector<double> sorted(stop_times.begin(), stop_times.end());
  std::sort(sorted.begin(), sorted.end());

  StabilityEstimate est;
  est.u_star = sorted[k - 1];
  est.replications = r;

  const auto half_window = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(r))));
  const std::size_t lo = k > half_window ? k - half_window : 1;
  const std::size_t hi = std::min(r, k + half_window);
  const double spread = sorted[hi - 1] - sorted[lo - 1];
  if (hi > lo && spread > 0.0 && p > 0.0 && p < 1.0) {
    const double density = static_cast<double>(hi - lo) / static_cast<double>(r) / spread;
    est.std_error_u = std::sqrt(p * (1.0 - p) / static_cast<double>(r)) / density;
  }
  return est;
}

StabilityEstimate estimate_max_stable_u(const SavingsVector& savings,
                                        const StabilityParams& params,
                                        std::size_t replications, std::uint64_t seed,
                                        unsigned workers) {
  if (replications == 0) throw InputError("replications must be >= 1");
  params.validate();
  const auto taus = sample_stop_times(savings, params, replications, seed, workers);
  return quantile_estimate(taus, params.beta);
}

StabilityEstimate estimate_max_stable_time(const SavingsVector& savings,
                                           const StabilityParams& params, const LifeTable& table,
                                           std::size_t replications, std::uint64_t seed,
                                           unsigned workers) {
  auto est = estimate_max_stable_u(savings, params, replications, seed, workers);
  est.t_star = table.f_inverse(est.u_star);
  return est;
}

std::vector<double> sample_death_times(std::size_t n, const LifeTable& table, StreamRng& rng) {
  std::vector<double> times(n);
  for (double& t : times) t = table.f_inverse(rng.uniform());
  return times;
}

}  // namespace poolfund
