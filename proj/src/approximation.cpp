#include "poolfund/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "poolfund/errors.hpp"
#include "poolfund/rng.hpp"

namespace poolfund {

ApproxResult approx_u(const ApproxInputs& inputs) {
  if (!(inputs.implied_number > 0.0) || !std::isfinite(inputs.implied_number)) {
    throw InputError("implied number must be finite and > 0");
  }
  if (!(inputs.eps_lower >= 0.0 && inputs.eps_lower < 1.0)) {
    throw InputError("eps1 must lie in [0,1)");
  }
  if (!(inputs.beta >= 0.0 && inputs.beta <= 1.0)) throw InputError("beta must lie in [0,1]");

  if (inputs.beta == 1.0) return {0.0, ApproxBoundary::certain_beta};
  if (inputs.eps_lower == 0.0) return {0.0, ApproxBoundary::zero_tolerance};

  const double band = (1.0 - inputs.eps_lower) / inputs.eps_lower;
  const double z = normal_quantile((1.0 - inputs.beta) / 2.0);
  return {1.0 / (1.0 + band * band * z * z / inputs.implied_number), ApproxBoundary::none};
}

double approx_time(const ApproxInputs& inputs, const LifeTable& table) {
  return table.f_inverse(approx_u(inputs).u);
}

double donsker_scale(const SavingsVector& savings) {
  return std::sqrt(savings.sum_of_squares()) / savings.sum();
}

double overlay_income_variance(const SavingsVector& savings, const LifeTable& table,
                               std::size_t member) {
  if (member >= savings.size()) {
    throw InputError("member index " + std::to_string(member) + " out of range");
  }
  const double p = table.yearly_survival()[0];
  const double bernoulli = p * (1.0 - p);
  if (bernoulli == 0.0) return 0.0;
  const double s = savings[member];
  const double base = (s - s / table.overlay_annuity_price(0)) * (1.0 + table.interest_rate()) /
                      table.overlay_annuity_price(1);
  const double total = savings.sum();
  return bernoulli * base * base * savings.sum_of_squares() / (total * total);
}

double reciprocal_survival_variance(const SavingsVector& savings, const LifeTable& table) {
  const double p = table.yearly_survival()[0];
  if (p == 0.0) throw DomainError("one-year survival is 0; the ratio is undefined");
  const double total = savings.sum();
  return (1.0 - p) / p * savings.sum_of_squares() / (total * total);
}

BridgeDiagnostics bridge_covariance_check(const SavingsVector& savings, std::size_t paths,
                                          std::span<const double> grid, std::uint64_t seed,
                                          unsigned workers) {
  if (paths < 2) throw InputError("bridge check needs at least two paths");
  if (grid.empty()) throw InputError("bridge check needs a nonempty grid");
  std::vector<double> points(grid.begin(), grid.end());
  std::sort(points.begin(), points.end());
  for (double u : points) {
    if (!(u > 0.0 && u < 1.0)) throw InputError("bridge grid points must lie in (0,1)");
  }
  const std::size_t g = points.size();
  const double total = savings.sum();
  const double norm = 1.0 / std::sqrt(savings.sum_of_squares());

  std::vector<double> values(paths * g);
  parallel_for(paths, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> bins(g + 1);
    for (std::size_t path = begin; path < end; ++path) {
      StreamRng rng(seed, path);
      std::fill(bins.begin(), bins.end(), 0.0);
      for (double s : savings) {
        const double u = rng.uniform();
        const auto bin = std::lower_bound(points.begin(), points.end(), u) - points.begin();
        bins[bin] += s;
      }
      double deceased = 0.0;
      for (std::size_t j = 0; j < g; ++j) {
        deceased += bins[j];
        values[path * g + j] = (points[j] * total - deceased) * norm;
      }
    }
  });

  BridgeDiagnostics out;
  out.grid = points;
  out.means.assign(g, 0.0);
  out.covariances.assign(g * g, 0.0);
  for (std::size_t path = 0; path < paths; ++path) {
    for (std::size_t j = 0; j < g; ++j) out.means[j] += values[path * g + j];
  }
  for (double& m : out.means) m /= static_cast<double>(paths);
  for (std::size_t path = 0; path < paths; ++path) {
    for (std::size_t j = 0; j < g; ++j) {
      const double dj = values[path * g + j] - out.means[j];
      for (std::size_t k = 0; k < g; ++k) {
        out.covariances[j * g + k] += dj * (values[path * g + k] - out.means[k]);
      }
    }
  }
  for (double& c : out.covariances) c /= static_cast<double>(paths - 1);

  for (std::size_t j = 0; j < g; ++j) {
    out.max_mean_deviation = std::max(out.max_mean_deviation, std::fabs(out.means[j]));
    for (std::size_t k = 0; k < g; ++k) {
      const double lo = std::min(points[j], points[k]);
      const double hi = std::max(points[j], points[k]);
      out.max_covariance_deviation = std::max(
          out.max_covariance_deviation, std::fabs(out.covariances[j * g + k] - lo * (1.0 - hi)));
    }
  }
  return out;
}

}  // namespace poolfund
