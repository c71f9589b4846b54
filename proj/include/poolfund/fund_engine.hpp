#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "poolfund/life_table.hpp"
#include "poolfund/savings.hpp"

namespace poolfund {

// Member accounts of a closed pooled annuity fund at an integer time.
//
// Invariants: wealth[i] > 0 iff alive[i]; alive accounts keep the ratios of
// the initial savings.
struct FundState {
  int time = 0;
  std::vector<double> wealth;
  std::vector<bool> alive;
  // Longevity credits M_i(time) booked on arrival at `time` (zero at time 0).
  std::vector<double> credits;
  // Funds left after the last member died; paid to heirs, never redistributed.
  double unallocated = 0.0;
  SavingsVector savings;
  std::shared_ptr<const LifeTable> table;

  std::size_t members() const { return wealth.size(); }
  std::size_t alive_count() const;
};

FundState init_fund(SavingsVector savings, std::shared_ptr<const LifeTable> table);

// C_i(t) = W_i(t) / a(x+t) for the living, 0 for the dead.
std::vector<double> income(const FundState& state);

// Advances one period. `newly_dead` lists the members dying in (t, t+1].
// Survivors receive (W_i - C_i)(1+R) plus credits in proportion to their
// savings; if nobody survives the grown pool is reported as `unallocated`.
FundState step(const FundState& state, std::span<const std::size_t> newly_dead);

// Closed-form account values and incomes at integer time t given who is
// alive at t. When the savings-weighted survival is zero (everyone dead)
// the values are all zero and `all_dead` is set.
struct ClosedForm {
  std::vector<double> values;
  bool all_dead = false;
};

// Savings-weighted experienced survival: sum of s_i over the living / sum s_i.
double weighted_survival(const SavingsVector& savings, const std::vector<bool>& alive);

ClosedForm explicit_wealth(const SavingsVector& savings, const LifeTable& table, int t,
                           const std::vector<bool>& alive);
ClosedForm explicit_income(const SavingsVector& savings, const LifeTable& table, int t,
                           const std::vector<bool>& alive);

// First-period income of the overlay variant, where the members dying in
// the first period also share in the credits and prices use alpha(x+t).
std::vector<double> overlay_first_income(const SavingsVector& savings, const LifeTable& table,
                                         std::span<const std::size_t> deaths_in_first_period);

}  // namespace poolfund
