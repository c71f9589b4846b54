#include "poolfund/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <random>

#include "poolfund/approximation.hpp"
#include "poolfund/errors.hpp"
#include "poolfund/fund_engine.hpp"
#include "poolfund/rng.hpp"

namespace poolfund {

namespace {

// Shortest decimal form that reads back to the same double.
std::string fmt(double x) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, x);
  return std::string(buffer, result.ptr);
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

}  // namespace

HorizonEstimate estimate_horizon(const SavingsVector& savings, const LifeTable* table,
                                 const RunOptions& options) {
  HorizonEstimate est;
  est.members = savings.size();
  est.nu = implied_number(savings);
  if (options.monte_carlo) {
    const auto mc = estimate_max_stable_u(savings, options.params, options.replications,
                                          options.seed, options.workers);
    est.u_mc = mc.u_star;
    est.se_u_mc = mc.std_error_u;
    if (table != nullptr) est.years_mc = table->f_inverse(mc.u_star);
  }
  // The approximation has no upper band, so it only answers the unbounded case.
  if (options.approximation && options.params.upper_unbounded()) {
    est.u_approx = approx_u({est.nu, options.params.eps_lower, options.params.beta}).u;
    if (table != nullptr) est.years_approx = table->f_inverse(*est.u_approx);
  }
  return est;
}

std::vector<PoolRow> run_sweep(const LifeTable* table, const RunOptions& options,
                               std::span<const std::size_t> n_poor_grid,
                               std::span<const double> ratios, std::size_t total) {
  if (n_poor_grid.empty() || ratios.empty()) throw InputError("sweep grids must be nonempty");
  if (total == 0) throw InputError("total member count must be >= 1");
  for (std::size_t n : n_poor_grid) {
    if (n > total) throw InputError("poor member count exceeds the total");
  }
  for (double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw InputError("savings ratios must lie in (0,1]");
  }

  std::map<std::size_t, HorizonEstimate> homogeneous;
  auto homogeneous_pool = [&](std::size_t members) -> const HorizonEstimate& {
    auto it = homogeneous.find(members);
    if (it == homogeneous.end()) {
      it = homogeneous
               .emplace(members, estimate_horizon(SavingsVector::homogeneous(members, 1.0), table,
                                                  options))
               .first;
    }
    return it->second;
  };

  std::vector<PoolRow> rows;
  for (std::size_t n_poor : n_poor_grid) {
    const std::size_t n_rich = total - n_poor;
    for (double ratio : ratios) {
      if (n_poor > 0) rows.push_back({"poor", n_poor, ratio, homogeneous_pool(n_poor)});
      if (n_rich > 0) rows.push_back({"rich", n_poor, ratio, homogeneous_pool(n_rich)});
      const bool uniform = ratio == 1.0 || n_poor == 0 || n_rich == 0;
      rows.push_back({"mixed", n_poor, ratio,
                      uniform ? homogeneous_pool(total)
                              : estimate_horizon(
                                    SavingsVector::two_group(n_poor, ratio, n_rich, 1.0), table,
                                    options)});
    }
  }
  return rows;
}

std::vector<PoolRow> run_table1(const LifeTable* table, const RunOptions& options,
                                std::size_t n_poor, std::span<const double> ratios,
                                std::size_t total) {
  const std::size_t grid[] = {n_poor};
  return run_sweep(table, options, grid, ratios, total);
}

std::vector<double> income_ratio_path(std::span<const double> order_stats,
                                      std::span<const double> savings_by_death,
                                      std::span<const double> grid) {
  if (order_stats.size() != savings_by_death.size()) {
    throw InputError("order statistics and savings differ in length");
  }
  double total = 0.0;
  for (double s : savings_by_death) total += s;
  std::vector<double> out;
  out.reserve(grid.size());
  std::size_t dead = 0;
  double dead_savings = 0.0;
  for (double v : grid) {
    while (dead < order_stats.size() && order_stats[dead] <= v) dead_savings += savings_by_death[dead++];
    const double experienced = dead == order_stats.size() ? 0.0 : (total - dead_savings) / total;
    out.push_back(experienced > 0.0 ? (1.0 - v) / experienced
                                    : std::numeric_limits<double>::infinity());
  }
  return out;
}

Figure1Result run_figure1(const SavingsVector& savings, const LifeTable& table,
                          const RunOptions& options, double grid_step_years) {
  if (!(grid_step_years > 0.0)) throw InputError("grid step must be > 0");
  const auto taus = sample_stop_times(savings, options.params, options.replications, options.seed,
                                      options.workers);
  const auto estimate = quantile_estimate(taus, options.params.beta);

  Figure1Result result;
  result.marker_u = estimate.u_star;
  result.marker_years = table.f_inverse(estimate.u_star);
  result.marker_se_u = estimate.std_error_u;
  result.lower_band = 1.0 - options.params.eps_lower;
  result.upper_band = 1.0 + options.params.eps_upper;

  const auto shown = std::find_if(taus.begin(), taus.end(),
                                  [&](double tau) { return tau >= estimate.u_star; });
  result.scenario = static_cast<std::size_t>(shown - taus.begin());
  result.scenario_tau = *shown;

  // Replay the draws of that replication.
  StreamRng rng(options.seed, result.scenario);
  const auto order_stats = sample_order_statistics(savings.size(), rng);
  const auto by_death = assign_savings_to_deaths(savings, rng);

  std::vector<double> grid_u;
  const double horizon = table.horizon_years();
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * grid_step_years;
    if (t > horizon) break;
    result.years.push_back(t);
    grid_u.push_back(table.distribution(t));
  }
  result.ratio = income_ratio_path(order_stats, by_death, grid_u);
  // The ratio is infinite once everyone has died; the path ends there.
  const auto finite = std::find_if(result.ratio.begin(), result.ratio.end(),
                                   [](double r) { return !std::isfinite(r); });
  const auto keep = static_cast<std::size_t>(finite - result.ratio.begin());
  result.ratio.resize(keep);
  result.years.resize(keep);
  return result;
}

std::vector<FundPathRow> run_fund_path(const SavingsVector& savings,
                                       std::shared_ptr<const LifeTable> table, std::uint64_t seed) {
  if (!table) throw InputError("fund path needs a life table");
  StreamRng rng(seed, 0);
  const auto death_times = sample_death_times(savings.size(), *table, rng);
  const int horizon = table->horizon_years();

  FundState state = init_fund(savings, table);
  const auto initial_income = income(state);
  std::vector<FundPathRow> rows;
  while (true) {
    const bool paying = state.time < horizon && state.alive_count() > 0;
    const auto paid = paying ? income(state) : std::vector<double>(state.members(), 0.0);
    for (std::size_t i = 0; i < state.members(); ++i) {
      rows.push_back({state.time, i, static_cast<bool>(state.alive[i]), state.wealth[i], paid[i],
                      paid[i] / initial_income[i], state.credits[i]});
    }
    if (!paying) break;
    std::vector<std::size_t> dying;
    for (std::size_t i = 0; i < state.members(); ++i) {
      const double t = death_times[i];
      if (state.alive[i] && t > state.time && t <= state.time + 1) dying.push_back(i);
    }
    state = step(state, dying);
  }
  return rows;
}

SavingsVector synthetic_roster(const SyntheticRosterSpec& spec, std::uint64_t seed) {
  if (spec.members == 0 || spec.groups == 0) throw InputError("roster needs members and groups");
  if (!(spec.tail_share >= 0.0 && spec.tail_share <= 1.0)) {
    throw InputError("tail share must lie in [0,1]");
  }
  StreamRng rng(seed, 0);
  std::normal_distribution<double> body(std::log(spec.body_median), spec.body_sigma);
  std::normal_distribution<double> tail(std::log(spec.tail_median), spec.tail_sigma);
  std::vector<double> raw(spec.members);
  for (double& x : raw) x = std::exp(rng.uniform() < spec.tail_share ? tail(rng) : body(rng));

  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / static_cast<double>(spec.groups);
  if (width == 0.0) return SavingsVector(std::move(raw));
  for (double& x : raw) {
    const auto bin = std::min<std::size_t>(static_cast<std::size_t>((x - lo) / width),
                                           spec.groups - 1);
    x = lo + (static_cast<double>(bin) + 0.5) * width;
  }
  return SavingsVector(std::move(raw));
}

void write_pool_rows_csv(std::ostream& out, std::span<const PoolRow> rows) {
  out << "pool,n_poor_count,savings_ratio,members_count,implied_number_count,"
         "u_mc_probability,u_mc_se_probability,u_approx_probability,t_mc_years,t_approx_years\n";
  for (const auto& row : rows) {
    const auto& e = row.estimate;
    out << row.pool << ',' << row.n_poor << ',' << fmt(row.ratio) << ',' << e.members << ','
        << fmt(e.nu) << ',' << fmt(e.u_mc) << ',' << fmt(e.se_u_mc) << ',' << fmt(e.u_approx)
        << ',' << fmt(e.years_mc) << ',' << fmt(e.years_approx) << '\n';
  }
}

void write_compare_csv(std::ostream& out, std::span<const PoolRow> rows) {
  out << "pool,n_poor_count,savings_ratio,members_count,implied_number_count,"
         "u_mc_probability,u_approx_probability,u_diff_probability,"
         "t_mc_years,t_approx_years,t_diff_years\n";
  for (const auto& row : rows) {
    const auto& e = row.estimate;
    std::optional<double> u_diff, t_diff;
    if (e.u_mc && e.u_approx) u_diff = *e.u_approx - *e.u_mc;
    if (e.years_mc && e.years_approx) t_diff = *e.years_approx - *e.years_mc;
    out << row.pool << ',' << row.n_poor << ',' << fmt(row.ratio) << ',' << e.members << ','
        << fmt(e.nu) << ',' << fmt(e.u_mc) << ',' << fmt(e.u_approx) << ',' << fmt(u_diff) << ','
        << fmt(e.years_mc) << ',' << fmt(e.years_approx) << ',' << fmt(t_diff) << '\n';
  }
}

void write_figure1_csv(std::ostream& out, const Figure1Result& result) {
  out << "time_years,income_ratio,lower_band_ratio,upper_band_ratio,marker_years\n";
  for (std::size_t k = 0; k < result.years.size(); ++k) {
    out << fmt(result.years[k]) << ',' << fmt(result.ratio[k]) << ',' << fmt(result.lower_band)
        << ',' << fmt(result.upper_band) << ',' << fmt(result.marker_years) << '\n';
  }
}

void write_fund_path_csv(std::ostream& out, std::span<const FundPathRow> rows) {
  out << "time_years,member,alive,wealth_amount,income_amount_per_year,income_ratio,"
         "credit_amount\n";
  for (const auto& row : rows) {
    out << row.time << ',' << row.member << ',' << (row.alive ? 1 : 0) << ',' << fmt(row.wealth)
        << ',' << fmt(row.income) << ',' << fmt(row.income_ratio) << ',' << fmt(row.credit)
        << '\n';
  }
}

void write_prefix_csv(std::ostream& out, const PrefixScan& scan, std::span<const double> amounts) {
  if (amounts.size() != scan.prefix_nu.size()) {
    throw InputError("prefix table needs one amount per prefix");
  }
  out << "z,cumulative_count,cumulative_nu\n";
  for (std::size_t i = 0; i < amounts.size(); ++i) {
    out << fmt(amounts[i]) << ',' << fmt(scan.cumulative_count[i]) << ','
        << fmt(scan.prefix_nu[i]) << '\n';
  }
}

}  // namespace poolfund
