#include "poolfund/fund_engine.hpp"

#include <algorithm>
#include <string>

#include "poolfund/errors.hpp"

namespace poolfund {

std::size_t FundState::alive_count() const {
  return static_cast<std::size_t>(std::count(alive.begin(), alive.end(), true));
}

FundState init_fund(SavingsVector savings, std::shared_ptr<const LifeTable> table) {
  if (!table) throw InputError("fund needs a life table");
  const std::size_t n = savings.size();
  std::vector<double> wealth(savings.begin(), savings.end());
  return FundState{0, std::move(wealth), std::vector<bool>(n, true), std::vector<double>(n, 0.0),
                   0.0, std::move(savings), std::move(table)};
}

std::vector<double> income(const FundState& state) {
  const double price = state.table->annuity_price(state.time);
  std::vector<double> out(state.members(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (state.alive[i]) out[i] = state.wealth[i] / price;
  }
  return out;
}

FundState step(const FundState& state, std::span<const std::size_t> newly_dead) {
  const std::size_t n = state.members();
  std::vector<bool> dies(n, false);
  for (std::size_t i : newly_dead) {
    if (i >= n) throw InputError("member index " + std::to_string(i) + " out of range");
    if (!state.alive[i] || dies[i]) {
      throw InputError("member " + std::to_string(i) + " is already dead");
    }
    dies[i] = true;
  }

  const std::vector<double> paid = income(state);
  const double growth = 1.0 + state.table->interest_rate();

  std::vector<double> invested(n, 0.0);
  double released = 0.0;         // D(t+1)
  double dead_savings = 0.0;     // savings of those dying in the period
  double survivor_savings = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!state.alive[i]) continue;
    invested[i] = (state.wealth[i] - paid[i]) * growth;
    if (dies[i]) {
      released += invested[i];
      dead_savings += state.savings[i];
    } else {
      survivor_savings += state.savings[i];
    }
  }

  FundState next{state.time + 1,
                 std::vector<double>(n, 0.0),
                 state.alive,
                 std::vector<double>(n, 0.0),
                 state.unallocated,
                 state.savings,
                 state.table};
  for (std::size_t i = 0; i < n; ++i) {
    if (dies[i]) next.alive[i] = false;
  }

  if (survivor_savings == 0.0) {
    next.unallocated += released;
    return next;
  }
  const double credit_rate = dead_savings / survivor_savings;
  for (std::size_t i = 0; i < n; ++i) {
    if (!next.alive[i]) continue;
    next.credits[i] = invested[i] * credit_rate;
    next.wealth[i] = invested[i] + next.credits[i];
  }
  return next;
}

double weighted_survival(const SavingsVector& savings, const std::vector<bool>& alive) {
  if (alive.size() != savings.size()) {
    throw InputError("alive flags and savings differ in length");
  }
  double living = 0.0;
  for (std::size_t i = 0; i < savings.size(); ++i) {
    if (alive[i]) living += savings[i];
  }
  return living / savings.sum();
}

ClosedForm explicit_wealth(const SavingsVector& savings, const LifeTable& table, int t,
                           const std::vector<bool>& alive) {
  const double price_ratio = table.annuity_price(t) / table.annuity_price(0);
  const double experienced = weighted_survival(savings, alive);
  ClosedForm out{std::vector<double>(savings.size(), 0.0), experienced == 0.0};
  if (out.all_dead) return out;
  const double factor = price_ratio * table.survival(t) / experienced;
  for (std::size_t i = 0; i < savings.size(); ++i) {
    if (alive[i]) out.values[i] = savings[i] * factor;
  }
  return out;
}

ClosedForm explicit_income(const SavingsVector& savings, const LifeTable& table, int t,
                           const std::vector<bool>& alive) {
  table.annuity_price(t);  // rejects durations at or beyond the limiting age
  const double price0 = table.annuity_price(0);
  const double experienced = weighted_survival(savings, alive);
  ClosedForm out{std::vector<double>(savings.size(), 0.0), experienced == 0.0};
  if (out.all_dead) return out;
  const double factor = table.survival(t) / experienced;
  for (std::size_t i = 0; i < savings.size(); ++i) {
    if (alive[i]) out.values[i] = savings[i] / price0 * factor;
  }
  return out;
}

std::vector<double> overlay_first_income(const SavingsVector& savings, const LifeTable& table,
                                         std::span<const std::size_t> deaths_in_first_period) {
  const std::size_t n = savings.size();
  std::vector<bool> died(n, false);
  double dead_savings = 0.0;
  for (std::size_t i : deaths_in_first_period) {
    if (i >= n) throw InputError("member index " + std::to_string(i) + " out of range");
    if (died[i]) throw InputError("member " + std::to_string(i) + " listed twice");
    died[i] = true;
    dead_savings += savings[i];
  }
  const double price0 = table.overlay_annuity_price(0);
  const double price1 = table.overlay_annuity_price(1);
  const double growth = 1.0 + table.interest_rate();
  const double share = 1.0 + dead_savings / savings.sum();

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double first_payment = savings[i] / price0;
    out[i] = (savings[i] - first_payment) * growth / price1 * share;
  }
  return out;
}

}  // namespace poolfund
