#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace poolfund {

// Survival model of a single cohort aged `base_age` at time 0.
//
// Built from one-year survival probabilities p(x+k), k = 0 .. omega-x-1. All
// but the last lie strictly in (0,1); the last is exactly 0 and marks the
// limiting age omega. Between integer durations the survival curve uses a
// constant force of mortality; inside the final year, where the force is
// unbounded, deaths are spread uniformly so that F stays continuous and
// F^{-1}(1) = omega - x.
//
// Immutable after construction and safe to share between threads.
class LifeTable {
 public:
  LifeTable(int base_age, std::vector<double> yearly_survival, double interest_rate);

  int base_age() const { return base_age_; }
  int limiting_age() const { return base_age_ + horizon_years(); }
  int horizon_years() const { return static_cast<int>(yearly_survival_.size()); }
  double interest_rate() const { return interest_rate_; }
  std::span<const double> yearly_survival() const { return yearly_survival_; }

  // tp_x; exactly the product of yearly survivals at integer t, 0 for t >= omega-x.
  double survival(double t) const;
  // F(t) = 1 - tp_x.
  double distribution(double t) const { return 1.0 - survival(t); }
  // The unique t with F(t) = u, u in [0,1].
  double f_inverse(double u) const;

  // Whole-life annuity-due price a(x+t) at integer duration t < omega-x.
  double annuity_price(int t) const;
  // Price alpha(x+t) used when recently deceased members share in the credits.
  double overlay_annuity_price(int t) const;

 private:
  int base_age_;
  double interest_rate_;
  std::vector<double> yearly_survival_;
  std::vector<double> cumulative_;  // k p_x for k = 0 .. omega-x
  std::vector<double> annuity_;
  std::vector<double> overlay_;
};

// Reads a comma-separated table with a header row naming `age` and `qx`
// and/or `lx` (lx wins when both are present). Other columns are ignored.
// The first row with qx = 1 (or lx = 0) fixes the limiting age.
LifeTable parse_life_table(std::istream& in, int base_age, double interest_rate);
LifeTable load_life_table(const std::filesystem::path& path, int base_age,
                          double interest_rate);

}  // namespace poolfund
