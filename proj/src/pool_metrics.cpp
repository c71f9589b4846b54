#include "poolfund/pool_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "poolfund/approximation.hpp"
#include "poolfund/errors.hpp"

namespace poolfund {

namespace {

bool is_whole(double x) { return std::isfinite(x) && x == std::floor(x); }

bool nu_at_least(double candidate, double best) {
  return candidate >= best * (1.0 - kNuTieTolerance);
}

}  // namespace

SavingsHashMap::SavingsHashMap(std::vector<double> amounts, std::vector<double> counts,
                               std::vector<double> weights)
    : amounts_(std::move(amounts)), counts_(std::move(counts)), weights_(std::move(weights)) {
  if (amounts_.empty()) throw InputError("hash map needs at least one amount");
  if (counts_.size() != amounts_.size()) throw InputError("hash map amounts and counts differ in length");
  if (weights_.empty()) weights_.assign(amounts_.size(), 1.0);
  if (weights_.size() != amounts_.size()) {
    throw InputError("hash map amounts and weights differ in length");
  }
  for (std::size_t i = 0; i < amounts_.size(); ++i) {
    if (!(amounts_[i] > 0.0) || !std::isfinite(amounts_[i])) {
      throw InputError("hash map amounts must be positive and finite");
    }
    if (i > 0 && !(amounts_[i] > amounts_[i - 1])) {
      throw InputError("hash map amounts must be strictly increasing");
    }
    if (!(counts_[i] > 0.0) || !std::isfinite(counts_[i])) {
      throw InputError("hash map counts must be positive and finite");
    }
    if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
      throw InputError("hash map weights must be positive and finite");
    }
  }
}

SavingsHashMap SavingsHashMap::from_savings(const SavingsVector& savings) {
  std::vector<double> sorted(savings.begin(), savings.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> amounts;
  std::vector<double> counts;
  for (double s : sorted) {
    if (!amounts.empty() && amounts.back() == s) {
      counts.back() += 1.0;
    } else {
      amounts.push_back(s);
      counts.push_back(1.0);
    }
  }
  return SavingsHashMap(std::move(amounts), std::move(counts));
}

SavingsHashMap SavingsHashMap::from_terms(std::span<const SavingsTerm> terms) {
  std::vector<SavingsTerm> sorted(terms.begin(), terms.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SavingsTerm& a, const SavingsTerm& b) { return a.amount < b.amount; });
  std::vector<double> amounts;
  std::vector<double> counts;
  for (const auto& term : sorted) {
    if (!amounts.empty() && amounts.back() == term.amount) {
      counts.back() += term.count;
    } else {
      amounts.push_back(term.amount);
      counts.push_back(term.count);
    }
  }
  return SavingsHashMap(std::move(amounts), std::move(counts));
}

double SavingsHashMap::total_count() const {
  double total = 0.0;
  for (double c : counts_) total += c;
  return total;
}

bool SavingsHashMap::has_integer_counts() const {
  return std::all_of(counts_.begin(), counts_.end(), is_whole);
}

bool SavingsHashMap::has_unit_weights() const {
  return std::all_of(weights_.begin(), weights_.end(), [](double w) { return w == 1.0; });
}

SavingsHashMap SavingsHashMap::prefix(std::size_t groups) const {
  if (groups == 0 || groups > amounts_.size()) {
    throw InputError("prefix length must lie in [1, " + std::to_string(amounts_.size()) + "]");
  }
  return SavingsHashMap(std::vector<double>(amounts_.begin(), amounts_.begin() + groups),
                        std::vector<double>(counts_.begin(), counts_.begin() + groups),
                        std::vector<double>(weights_.begin(), weights_.begin() + groups));
}

SavingsHashMap SavingsHashMap::with_scaled_counts(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw InputError("count factor must be > 0");
  std::vector<double> counts = counts_;
  for (double& c : counts) c *= factor;
  return SavingsHashMap(amounts_, std::move(counts), weights_);
}

SavingsVector SavingsHashMap::expand() const {
  if (!has_integer_counts()) throw InputError("only whole counts expand to a member roster");
  if (!has_unit_weights()) throw InputError("weighted hash maps have no member roster");
  std::vector<double> members;
  members.reserve(static_cast<std::size_t>(total_count()));
  for (std::size_t i = 0; i < amounts_.size(); ++i) {
    members.insert(members.end(), static_cast<std::size_t>(counts_[i]), amounts_[i]);
  }
  return SavingsVector(std::move(members));
}

// Amounts are divided by the largest one first, so equal amounts sum to
// exact integers and a homogeneous roster scores exactly its size.
double implied_number(const SavingsVector& savings) {
  const double top = savings.max();
  double linear = 0.0;
  double square = 0.0;
  for (double s : savings) {
    const double x = s / top;
    linear += x;
    square += x * x;
  }
  return linear * linear / square;
}

double implied_number(const SavingsHashMap& map) {
  double linear = 0.0;
  double square = 0.0;
  const double top = map.amounts().back();
  for (std::size_t i = 0; i < map.groups(); ++i) {
    const double z = map.amounts()[i] / top;
    const double mass = map.counts()[i] * map.weights()[i];
    linear += z * mass;
    square += z * z * mass;
  }
  return linear * linear / square;
}

double optimal_extension_amount(const SavingsVector& savings) {
  return savings.sum_of_squares() / savings.sum();
}

MergeCheck merge_benefit_check(const SavingsVector& poor, const SavingsVector& rich) {
  if (poor.max() > rich.min()) {
    throw InputError("merge check needs every poor amount <= every rich amount");
  }
  std::vector<double> merged(poor.begin(), poor.end());
  merged.insert(merged.end(), rich.begin(), rich.end());
  return {implied_number(rich), implied_number(SavingsVector(std::move(merged)))};
}

std::optional<double> lambda_threshold(const SavingsVector& poor, const SavingsVector& rich) {
  const double poor_ratio = poor.sum_of_squares() / poor.sum();
  const double rich_ratio = rich.sum_of_squares() / rich.sum();
  if (!(2.0 * poor_ratio < rich_ratio)) return std::nullopt;
  // The poor-only pool wins once 1/lambda < A.
  const double a = poor.sum() / rich.sum() / poor_ratio * (rich_ratio - 2.0 * poor_ratio);
  return 1.0 / a;
}

NuBounds worst_case_nu_bounds(double n, double m, double big_m) {
  if (!(n >= 1.0) || !std::isfinite(n)) throw InputError("member count must be >= 1");
  if (!(m > 0.0 && big_m > m) || !std::isfinite(big_m)) {
    throw InputError("worst-case bounds need 0 < m < M");
  }
  const double lower = n * 4.0 * m * big_m / ((m + big_m) * (m + big_m));
  const double upper = lower * (1.0 + big_m * big_m * big_m / (4.0 * m * m * m * n * n));
  return {lower, upper};
}

double worst_case_nu_exact(std::size_t n, double m, double big_m) {
  worst_case_nu_bounds(static_cast<double>(n), m, big_m);
  double best = std::numeric_limits<double>::infinity();
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k <= n; ++k) {
    const double share = static_cast<double>(k) / nn;
    const double linear = big_m * share + m * (1.0 - share);
    const double square = big_m * big_m * share + m * m * (1.0 - share);
    best = std::min(best, nn * linear * linear / square);
  }
  return best;
}

PrefixScan best_prefix(const SavingsHashMap& map) {
  PrefixScan scan;
  scan.prefix_nu.reserve(map.groups());
  scan.cumulative_count.reserve(map.groups());
  double linear = 0.0;
  double square = 0.0;
  double members = 0.0;
  for (std::size_t i = 0; i < map.groups(); ++i) {
    const double z = map.amounts()[i];
    const double mass = map.counts()[i] * map.weights()[i];
    linear += z * mass;
    square += z * z * mass;
    members += map.counts()[i];
    const double nu = linear * linear / square;
    scan.prefix_nu.push_back(nu);
    scan.cumulative_count.push_back(members);
    scan.nu_max = std::max(scan.nu_max, nu);
  }
  for (std::size_t i = map.groups(); i-- > 0;) {
    if (nu_at_least(scan.prefix_nu[i], scan.nu_max)) {
      scan.best_groups = i + 1;
      break;
    }
  }
  return scan;
}

SubgroupOptimum brute_force_best_subgroup(const SavingsHashMap& map, unsigned workers) {
  if (!map.has_integer_counts()) throw InputError("exhaustive search needs whole counts");
  const std::size_t groups = map.groups();
  std::vector<std::size_t> limits(groups);
  double space = 1.0;
  for (std::size_t i = 0; i < groups; ++i) {
    limits[i] = static_cast<std::size_t>(map.counts()[i]);
    space *= map.counts()[i] + 1.0;
  }
  if (space > 1e6) {
    throw DomainError("search space of " + std::to_string(space) + " subgroups exceeds 1e6");
  }

  // One slot per count of the first group; later groups are enumerated inside.
  const std::size_t outer = limits[0] + 1;
  std::vector<SubgroupOptimum> partial(outer);
  parallel_for(outer, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> counts(groups, 0);
    for (std::size_t first = begin; first < end; ++first) {
      SubgroupOptimum& best = partial[first];
      best.counts.assign(groups, 0);
      best.nu_max = -1.0;
      std::fill(counts.begin(), counts.end(), 0);
      counts[0] = first;
      while (true) {
        double linear = 0.0;
        double square = 0.0;
        for (std::size_t i = 0; i < groups; ++i) {
          const double mass = static_cast<double>(counts[i]) * map.weights()[i];
          linear += map.amounts()[i] * mass;
          square += map.amounts()[i] * map.amounts()[i] * mass;
        }
        const double nu = square > 0.0 ? linear * linear / square : 0.0;
        if (nu > best.nu_max) {
          best.nu_max = nu;
          best.counts = counts;
        }
        std::size_t i = 1;
        while (i < groups && counts[i] == limits[i]) counts[i++] = 0;
        if (i == groups) break;
        ++counts[i];
      }
    }
  });

  SubgroupOptimum result = partial[0];
  for (std::size_t first = 1; first < outer; ++first) {
    if (partial[first].nu_max > result.nu_max) result = partial[first];
  }
  return result;
}

bool is_beneficial(const SavingsHashMap& map) {
  return best_prefix(map).best_groups == map.groups();
}

bool is_beneficial(const SavingsVector& savings) {
  return is_beneficial(SavingsHashMap::from_savings(savings));
}

bool cap_extension_is_beneficial(const SavingsVector& savings, std::size_t extra_members) {
  if (!is_beneficial(savings)) throw InputError("the starting roster is not beneficial");
  std::vector<double> extended(savings.begin(), savings.end());
  extended.insert(extended.end(), extra_members, savings.max());
  return is_beneficial(SavingsVector(std::move(extended)));
}

namespace {

HorizonPair horizon(double nu, const LifeTable& table, const StabilityParams& params) {
  const double u = approx_u({nu, params.eps_lower, params.beta}).u;
  return {u, table.f_inverse(u)};
}

}  // namespace

CapAdvice cap_advise(const SavingsVector& savings, const LifeTable* table,
                     const StabilityParams& params, double slack) {
  if (!(slack >= 0.0 && slack < 1.0)) throw InputError("slack must lie in [0,1)");
  const auto map = SavingsHashMap::from_savings(savings);
  CapAdvice advice;
  advice.scan = best_prefix(map);
  advice.amounts.assign(map.amounts().begin(), map.amounts().end());
  advice.slack = slack;
  advice.recommended_cap = advice.amounts[advice.scan.best_groups - 1];
  advice.nu_whole = advice.scan.prefix_nu.back();

  const double floor = advice.scan.nu_max * (1.0 - slack);
  advice.nu_window_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < map.groups(); ++i) {
    if (!nu_at_least(advice.scan.prefix_nu[i], floor)) continue;
    advice.window.push_back(i + 1);
    advice.nu_window_min = std::min(advice.nu_window_min, advice.scan.prefix_nu[i]);
    advice.nu_window_max = std::max(advice.nu_window_max, advice.scan.prefix_nu[i]);
  }
  const std::size_t first = advice.window.front() - 1;
  const std::size_t last = advice.window.back() - 1;
  advice.cap_low = advice.amounts[first];
  advice.cap_high = advice.amounts[last];
  advice.members_low = advice.scan.cumulative_count[first];
  advice.members_high = advice.scan.cumulative_count[last];

  std::vector<double> capped(savings.begin(), savings.end());
  for (double& s : capped) s = std::min(s, advice.recommended_cap);
  advice.nu_capped_contributions = implied_number(SavingsVector(std::move(capped)));

  if (table != nullptr) {
    advice.horizon_best = horizon(advice.scan.nu_max, *table, params);
    advice.horizon_window_min = horizon(advice.nu_window_min, *table, params);
    advice.horizon_window_max = horizon(advice.nu_window_max, *table, params);
    advice.horizon_whole = horizon(advice.nu_whole, *table, params);
    advice.horizon_capped_contributions = horizon(advice.nu_capped_contributions, *table, params);
  }
  return advice;
}

}  // namespace poolfund
