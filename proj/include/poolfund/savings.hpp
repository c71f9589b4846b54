#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace poolfund {

// Initial savings s_1..s_N of the members of one pool. Every amount is
// strictly positive and finite; N >= 1.
class SavingsVector {
 public:
  explicit SavingsVector(std::vector<double> amounts);

  // n members holding `amount` each.
  static SavingsVector homogeneous(std::size_t n, double amount);
  // n_low members at `low` followed by n_high members at `high`. Either count
  // may be zero, but not both.
  static SavingsVector two_group(std::size_t n_low, double low, std::size_t n_high,
                                 double high);

  std::size_t size() const { return amounts_.size(); }
  double operator[](std::size_t i) const { return amounts_[i]; }
  std::span<const double> amounts() const { return amounts_; }
  auto begin() const { return amounts_.begin(); }
  auto end() const { return amounts_.end(); }

  double sum() const;
  double sum_of_squares() const;
  double max() const;
  double min() const;

  SavingsVector scaled(double factor) const;

 private:
  std::vector<double> amounts_;
};

// One `count@amount` term of an inline roster specification.
struct SavingsTerm {
  double count;
  double amount;
};

// Parses `count@amount[,count@amount...]`. Counts may be fractional here;
// conversion to a SavingsVector requires whole counts.
std::vector<SavingsTerm> parse_savings_spec(std::string_view spec);
bool looks_like_savings_spec(std::string_view text);

SavingsVector expand_savings_terms(std::span<const SavingsTerm> terms);

// Reads one amount per line; a single non-numeric header line is skipped,
// and only the first comma-separated field of each line is used.
SavingsVector read_savings_csv(std::string_view path);

}  // namespace poolfund
