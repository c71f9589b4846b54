#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "poolfund/life_table.hpp"
#include "poolfund/parallel.hpp"
#include "poolfund/savings.hpp"

namespace poolfund {

// Standard normal quantile, |error| below 1e-15 on (0,1); +-inf at 1 and 0.
double normal_quantile(double p);

// Inputs of the Brownian-bridge horizon approximation. Only the lower band
// enters: the approximation assumes no upper bound on the income ratio.
struct ApproxInputs {
  double implied_number = 1.0;  // nu(s) > 0
  double eps_lower = 0.1;       // in [0,1); 0 is the degenerate limit
  double beta = 0.9;            // in [0,1]; 1 is the degenerate limit
};

enum class ApproxBoundary {
  none,
  certain_beta,    // beta = 1: the normal quantile is infinite, u = 0
  zero_tolerance,  // eps_lower = 0: no room below the initial income, u = 0
};

struct ApproxResult {
  double u = 0.0;
  ApproxBoundary boundary = ApproxBoundary::none;
};

// u = 1 / (1 + ((1-eps)/eps)^2 * Phi^{-1}((1-beta)/2)^2 / nu).
ApproxResult approx_u(const ApproxInputs& inputs);
// Calendar years F^{-1}(u).
double approx_time(const ApproxInputs& inputs, const LifeTable& table);

// sqrt(sum s^2) / sum s, the scale of the limiting bridge; equals 1/sqrt(nu).
double donsker_scale(const SavingsVector& savings);

// Variance of the first overlay-fund income of `member` under independent
// first-year deaths.
double overlay_income_variance(const SavingsVector& savings, const LifeTable& table,
                               std::size_t member);

// Variance of 1phat_x / 1p_x, the reciprocal of the first-year income ratio.
double reciprocal_survival_variance(const SavingsVector& savings, const LifeTable& table);

// Empirical moments of X_N(u) = sum s_i (u - 1{U_i <= u}) / sqrt(sum s_i^2)
// on a grid, against the standard bridge: mean 0, Cov(u,v) = u(1-v), u <= v.
struct BridgeDiagnostics {
  std::vector<double> grid;
  std::vector<double> means;
  std::vector<double> covariances;  // row-major, grid.size() squared
  double max_mean_deviation = 0.0;
  double max_covariance_deviation = 0.0;
};

BridgeDiagnostics bridge_covariance_check(const SavingsVector& savings, std::size_t paths,
                                          std::span<const double> grid, std::uint64_t seed,
                                          unsigned workers = default_workers());

}  // namespace poolfund
