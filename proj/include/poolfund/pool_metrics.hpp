#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "poolfund/life_table.hpp"
#include "poolfund/parallel.hpp"
#include "poolfund/savings.hpp"
#include "poolfund/stability_mc.hpp"

namespace poolfund {

// Compressed roster: distinct amounts z_1 < ... < z_I with member counts N_i
// and optional weights w_i (default 1). Counts and weights may be fractional.
// Amounts are grouped by exact binary equality.
class SavingsHashMap {
 public:
  SavingsHashMap(std::vector<double> amounts, std::vector<double> counts,
                 std::vector<double> weights = {});

  static SavingsHashMap from_savings(const SavingsVector& savings);
  // Sorts the terms and merges equal amounts.
  static SavingsHashMap from_terms(std::span<const SavingsTerm> terms);

  std::size_t groups() const { return amounts_.size(); }
  std::span<const double> amounts() const { return amounts_; }
  std::span<const double> counts() const { return counts_; }
  std::span<const double> weights() const { return weights_; }

  double total_count() const;
  bool has_integer_counts() const;
  bool has_unit_weights() const;

  // The first `groups` amounts with their full counts.
  SavingsHashMap prefix(std::size_t groups) const;
  SavingsHashMap with_scaled_counts(double factor) const;
  // Member-level roster; needs whole counts and unit weights.
  SavingsVector expand() const;

 private:
  std::vector<double> amounts_;
  std::vector<double> counts_;
  std::vector<double> weights_;
};

// nu(s) = (sum s)^2 / sum s^2, the implied number of homogeneous members.
double implied_number(const SavingsVector& savings);
// Weighted form (sum z N w)^2 / sum z^2 N w.
double implied_number(const SavingsHashMap& map);

// x* = sum s^2 / sum s, the single new amount that raises nu by exactly 1.
double optimal_extension_amount(const SavingsVector& savings);

struct MergeCheck {
  double nu_rich = 0.0;
  double nu_merged = 0.0;
};

// Requires max(poor) <= min(rich); then nu_merged >= nu_rich.
MergeCheck merge_benefit_check(const SavingsVector& poor, const SavingsVector& rich);

// Threshold lambda* such that the pool of `lambda` copies of `poor` has a
// larger implied number than those copies plus `rich`, for every integer
// lambda > lambda*. Requires 2 sum p^2 / sum p < sum r^2 / sum r; returns
// nullopt when that fails.
std::optional<double> lambda_threshold(const SavingsVector& poor, const SavingsVector& rich);

struct NuBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// Bounds on the smallest implied number over all n-member rosters with
// amounts in [m, M]: n 4mM/(m+M)^2 and that times (1 + M^3 / (4 m^3 n^2)).
NuBounds worst_case_nu_bounds(double n, double m, double big_m);
// The attained minimum, over k members at M and n-k at m.
double worst_case_nu_exact(std::size_t n, double m, double big_m);

struct PrefixScan {
  std::size_t best_groups = 0;           // i*, number of leading groups kept
  double nu_max = 0.0;
  std::vector<double> prefix_nu;         // nu of groups 1..i, i = 1..I
  std::vector<double> cumulative_count;  // members in groups 1..i
};

// Relative tolerance under which two implied numbers count as tied.
inline constexpr double kNuTieTolerance = 1e-12;

// Implied number of every cumulative prefix; the best one maximises nu over
// all sub-rosters. Ties go to the larger prefix.
PrefixScan best_prefix(const SavingsHashMap& map);

struct SubgroupOptimum {
  std::vector<std::size_t> counts;
  double nu_max = 0.0;
};

// Exhaustive search over integer 0 <= n_i <= N_i (empty roster scores 0).
// Needs whole counts and prod(N_i + 1) <= 1e6.
SubgroupOptimum brute_force_best_subgroup(const SavingsHashMap& map,
                                          unsigned workers = default_workers());

// True iff the whole roster attains the maximal implied number.
bool is_beneficial(const SavingsHashMap& map);
bool is_beneficial(const SavingsVector& savings);

// Extends a beneficial roster by `extra_members` members at its maximum
// amount and reports whether the result is beneficial (always true).
bool cap_extension_is_beneficial(const SavingsVector& savings, std::size_t extra_members);

struct HorizonPair {
  double u = 0.0;
  double years = 0.0;
};

struct CapAdvice {
  PrefixScan scan;
  std::vector<double> amounts;
  std::vector<std::size_t> window;  // prefixes (group counts) within slack of nu_max
  double slack = 0.0;
  double recommended_cap = 0.0;     // amount of the best prefix
  double cap_low = 0.0, cap_high = 0.0;
  double members_low = 0.0, members_high = 0.0;
  double nu_window_min = 0.0, nu_window_max = 0.0;
  double nu_whole = 0.0;
  // Everyone joins but contributes at most the recommended cap.
  double nu_capped_contributions = 0.0;

  // Approximate stable horizons, filled when a life table is supplied.
  std::optional<HorizonPair> horizon_best;
  std::optional<HorizonPair> horizon_window_min;
  std::optional<HorizonPair> horizon_window_max;
  std::optional<HorizonPair> horizon_whole;
  std::optional<HorizonPair> horizon_capped_contributions;
};

inline constexpr double kDefaultCapSlack = 0.03;

CapAdvice cap_advise(const SavingsVector& savings, const LifeTable* table,
                     const StabilityParams& params, double slack = kDefaultCapSlack);

}  // namespace poolfund
