#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "poolfund/life_table.hpp"
#include "poolfund/parallel.hpp"
#include "poolfund/rng.hpp"
#include "poolfund/savings.hpp"

namespace poolfund {

// Tolerance band [1 - eps_lower, 1 + eps_upper] for the income ratio and the
// confidence beta with which the band must hold.
struct StabilityParams {
  double eps_lower = 0.1;
  double eps_upper = std::numeric_limits<double>::infinity();
  double beta = 0.9;

  bool upper_unbounded() const { return std::isinf(eps_upper); }
  void validate() const;
};

struct StabilityEstimate {
  double u_star = 0.0;             // transformed time F(t*) in [0,1]
  std::optional<double> t_star;    // calendar years, when a life table is supplied
  std::size_t replications = 0;
  double std_error_u = 0.0;
};

// Order statistics of n i.i.d. uniforms from normalised partial sums of n+1
// standard exponentials; no sorting involved.
void sample_order_statistics(std::span<double> out, StreamRng& rng);
std::vector<double> sample_order_statistics(std::size_t n, StreamRng& rng);

// Uniformly random arrangement of the savings over the death order
// (forward Fisher-Yates: position k draws from the not yet placed amounts).
std::vector<double> assign_savings_to_deaths(const SavingsVector& savings, StreamRng& rng);

// Transformed time at which the ratio (1-v) / (1 - Fhat(v)) first leaves the
// band, where Fhat is the savings-weighted share of the deceased.
// `savings_by_death[k]` belongs to the member dying at order_stats[k].
// Returns 1 when the band is never left.
double stop_time_tau(std::span<const double> order_stats,
                     std::span<const double> savings_by_death, const StabilityParams& params);

// R independent stop times; replication r uses StreamRng(seed, r).
std::vector<double> sample_stop_times(const SavingsVector& savings, const StabilityParams& params,
                                      std::size_t replications, std::uint64_t seed,
                                      unsigned workers = default_workers());

// Lower empirical (1-beta)-quantile: the ceil((1-beta) R)-th smallest sample,
// so that P[tau >= u*] >= beta. The standard error uses the binomial
// quantile variance with the density estimated from the spacing of the
// order statistics sqrt(R) ranks either side.
StabilityEstimate quantile_estimate(std::span<const double> stop_times, double beta);

StabilityEstimate estimate_max_stable_u(const SavingsVector& savings,
                                        const StabilityParams& params,
                                        std::size_t replications, std::uint64_t seed,
                                        unsigned workers = default_workers());

StabilityEstimate estimate_max_stable_time(const SavingsVector& savings,
                                           const StabilityParams& params, const LifeTable& table,
                                           std::size_t replications, std::uint64_t seed,
                                           unsigned workers = default_workers());

// Remaining lifetimes T_i = F^{-1}(U_i) of n members.
std::vector<double> sample_death_times(std::size_t n, const LifeTable& table, StreamRng& rng);

}  // namespace poolfund
