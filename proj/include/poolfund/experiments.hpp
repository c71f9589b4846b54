#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poolfund/life_table.hpp"
#include "poolfund/parallel.hpp"
#include "poolfund/pool_metrics.hpp"
#include "poolfund/savings.hpp"
#include "poolfund/stability_mc.hpp"

namespace poolfund {

inline constexpr std::uint64_t kDefaultSeed = 20240901;
inline constexpr std::size_t kDefaultReplications = 100000;
inline constexpr std::size_t kPaperReplications = 1000000;

struct RunOptions {
  StabilityParams params;
  std::size_t replications = kDefaultReplications;
  std::uint64_t seed = kDefaultSeed;
  unsigned workers = default_workers();
  bool monte_carlo = true;
  bool approximation = true;
};

// Monte Carlo and approximate horizon of one pool. Years are present only
// when a life table was supplied.
struct HorizonEstimate {
  std::size_t members = 0;
  double nu = 0.0;
  std::optional<double> u_mc;
  std::optional<double> se_u_mc;
  std::optional<double> u_approx;
  std::optional<double> years_mc;
  std::optional<double> years_approx;
};

HorizonEstimate estimate_horizon(const SavingsVector& savings, const LifeTable* table,
                                 const RunOptions& options);

// One pool of the poor/rich experiment: `n_poor` members at savings `ratio`
// and `total - n_poor` members at savings 1.
struct PoolRow {
  std::string pool;  // "poor", "rich" or "mixed"
  std::size_t n_poor = 0;
  double ratio = 1.0;
  HorizonEstimate estimate;
};

inline constexpr std::size_t kTable1Poor = 800;
inline constexpr std::size_t kTable1Total = 1000;
inline const std::vector<double> kTable1Ratios{1.0, 0.7, 0.5, 0.3, 0.2, 0.1};

// Poor-only, rich-only and mixed pools for every ratio; pools without
// members are skipped. Homogeneous pools are simulated once per size.
std::vector<PoolRow> run_sweep(const LifeTable* table, const RunOptions& options,
                               std::span<const std::size_t> n_poor_grid,
                               std::span<const double> ratios, std::size_t total = kTable1Total);

std::vector<PoolRow> run_table1(const LifeTable* table, const RunOptions& options,
                                std::size_t n_poor = kTable1Poor,
                                std::span<const double> ratios = kTable1Ratios,
                                std::size_t total = kTable1Total);

// The experienced income ratio (1-v) / (1 - Fhat(v)) of one scenario,
// sampled on a calendar-year grid, with the pool's stop-time marker.
struct Figure1Result {
  double marker_u = 0.0;
  double marker_years = 0.0;
  double marker_se_u = 0.0;
  std::size_t scenario = 0;   // replication index whose path is shown
  double scenario_tau = 0.0;  // that path's own stop time (transformed)
  double lower_band = 0.0;
  double upper_band = 0.0;
  std::vector<double> years;
  std::vector<double> ratio;
};

// Uses the Monte Carlo draws of replication r for the path, taking the
// first r whose own stop time is at or after the marker.
Figure1Result run_figure1(const SavingsVector& savings, const LifeTable& table,
                          const RunOptions& options, double grid_step_years = 0.05);

// Experienced income ratio at transformed times `grid` (sorted) for given
// death order statistics and the savings of each death.
std::vector<double> income_ratio_path(std::span<const double> order_stats,
                                      std::span<const double> savings_by_death,
                                      std::span<const double> grid);

struct FundPathRow {
  int time = 0;
  std::size_t member = 0;
  bool alive = false;
  double wealth = 0.0;
  double income = 0.0;
  double income_ratio = 0.0;  // C_i(t) / C_i(0), 0 once dead
  double credit = 0.0;
};

// Runs the fund recursion on death times drawn from StreamRng(seed, 0) until
// everyone has died or the table ends.
std::vector<FundPathRow> run_fund_path(const SavingsVector& savings,
                                       std::shared_ptr<const LifeTable> table, std::uint64_t seed);

// Synthetic roster standing in for an unpublished savings sample: a
// lognormal body plus a richer lognormal tail, then binned to the midpoints
// of `groups` equal-width bins.
struct SyntheticRosterSpec {
  std::size_t members = 1000;
  std::size_t groups = 50;
  double body_median = 150000.0;
  double body_sigma = 0.45;
  double tail_share = 0.08;
  double tail_median = 700000.0;
  double tail_sigma = 0.5;
};

SavingsVector synthetic_roster(const SyntheticRosterSpec& spec, std::uint64_t seed);

// CSV writers; every numeric column names its unit.
void write_pool_rows_csv(std::ostream& out, std::span<const PoolRow> rows);
void write_compare_csv(std::ostream& out, std::span<const PoolRow> rows);
void write_figure1_csv(std::ostream& out, const Figure1Result& result);
void write_fund_path_csv(std::ostream& out, std::span<const FundPathRow> rows);
// Prefix table: z, cumulative_count, cumulative_nu.
void write_prefix_csv(std::ostream& out, const PrefixScan& scan, std::span<const double> amounts);

}  // namespace poolfund
