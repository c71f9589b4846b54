#include "poolfund/life_table.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>

#include "poolfund/errors.hpp"

namespace poolfund {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    fields.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return fields;
}

double parse_number(const std::string& field, std::size_t line_no) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw InputError("life table line " + std::to_string(line_no) + ": '" + field +
                     "' is not a number");
  }
  return value;
}

// HMD exports write the open age group as "110+".
int parse_age(std::string field, std::size_t line_no) {
  if (!field.empty() && field.back() == '+') field.pop_back();
  int age = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), age);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw InputError("life table line " + std::to_string(line_no) + ": age '" + field +
                     "' is not an integer");
  }
  return age;
}

}  // namespace

LifeTable::LifeTable(int base_age, std::vector<double> yearly_survival, double interest_rate)
    : base_age_(base_age),
      interest_rate_(interest_rate),
      yearly_survival_(std::move(yearly_survival)) {
  if (!(interest_rate_ >= 0.0) || !std::isfinite(interest_rate_)) {
    throw InputError("interest rate must be finite and >= 0");
  }
  if (yearly_survival_.empty()) throw InputError("life table has no survival years");
  if (yearly_survival_.back() != 0.0) {
    throw InputError("life table must end at a limiting age (final one-year survival 0)");
  }
  for (std::size_t k = 0; k + 1 < yearly_survival_.size(); ++k) {
    const double p = yearly_survival_[k];
    if (!(p > 0.0 && p < 1.0)) {
      throw InputError("one-year survival at age " + std::to_string(base_age_ + k) +
                       " must lie strictly in (0,1)");
    }
  }

  const int n = horizon_years();
  cumulative_.resize(n + 1);
  cumulative_[0] = 1.0;
  for (int k = 0; k < n; ++k) cumulative_[k + 1] = cumulative_[k] * yearly_survival_[k];

  const double discount = 1.0 / (1.0 + interest_rate_);
  annuity_.resize(n);
  overlay_.resize(n);
  for (int t = 0; t < n; ++t) {
    double price = 1.0, overlay = 1.0;
    double survive = 1.0, overlay_factor = 1.0, v = 1.0;
    for (int delta = 1; t + delta < n; ++delta) {
      const double p = yearly_survival_[t + delta - 1];
      v *= discount;
      survive *= p;
      overlay_factor /= (2.0 - p);
      price += v * survive;
      overlay += v * overlay_factor;
    }
    annuity_[t] = price;
    overlay_[t] = overlay;
  }
}

double LifeTable::survival(double t) const {
  assert(t >= 0.0);
  if (t <= 0.0) return 1.0;
  const int n = horizon_years();
  if (t >= n) return 0.0;
  const int k = static_cast<int>(std::floor(t));
  const double frac = t - k;
  if (frac == 0.0) return cumulative_[k];
  if (k == n - 1) return cumulative_[k] * (1.0 - frac);
  return cumulative_[k] * std::pow(yearly_survival_[k], frac);
}

double LifeTable::f_inverse(double u) const {
  assert(u >= 0.0 && u <= 1.0);
  const int n = horizon_years();
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return n;
  const double target = 1.0 - u;
  // First duration whose survival drops below the target; cumulative_[n] = 0.
  const auto it = std::partition_point(cumulative_.begin(), cumulative_.end(),
                                       [target](double c) { return c >= target; });
  const int k = static_cast<int>(it - cumulative_.begin()) - 1;
  double frac = 0.0;
  if (k == n - 1) {
    frac = 1.0 - target / cumulative_[k];
  } else {
    frac = std::log(target / cumulative_[k]) / std::log(yearly_survival_[k]);
  }
  return k + std::clamp(frac, 0.0, 1.0);
}

double LifeTable::annuity_price(int t) const {
  if (t < 0 || t >= horizon_years()) {
    throw DomainError("annuity price requested at duration " + std::to_string(t) +
                      ", at or beyond the limiting age");
  }
  return annuity_[t];
}

double LifeTable::overlay_annuity_price(int t) const {
  if (t < 0 || t >= horizon_years()) {
    throw DomainError("overlay annuity price requested at duration " + std::to_string(t) +
                      ", at or beyond the limiting age");
  }
  return overlay_[t];
}

LifeTable parse_life_table(std::istream& in, int base_age, double interest_rate) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw InputError("life table is empty");

  std::optional<std::size_t> age_col, qx_col, lx_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name = header[i];
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (name == "age") age_col = i;
    if (name == "qx") qx_col = i;
    if (name == "lx") lx_col = i;
  }
  if (!age_col) throw InputError("life table header lacks an 'age' column");
  if (!qx_col && !lx_col) throw InputError("life table header needs a 'qx' or 'lx' column");
  const bool use_lx = lx_col.has_value();
  const std::size_t value_col = use_lx ? *lx_col : *qx_col;

  std::vector<int> ages;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() <= std::max(*age_col, value_col)) {
      throw InputError("life table line " + std::to_string(line_no) + " has too few columns");
    }
    const int age = parse_age(fields[*age_col], line_no);
    const double value = parse_number(fields[value_col], line_no);
    if (!ages.empty() && age != ages.back() + 1) {
      throw InputError("life table ages are not contiguous at line " + std::to_string(line_no));
    }
    if (use_lx ? !(value >= 0.0) : !(value >= 0.0 && value <= 1.0)) {
      throw InputError("life table line " + std::to_string(line_no) +
                       (use_lx ? ": lx must be >= 0" : ": qx outside [0,1]"));
    }
    ages.push_back(age);
    values.push_back(value);
  }
  if (ages.empty()) throw InputError("life table has no data rows");
  if (base_age < ages.front() || base_age > ages.back()) {
    throw InputError("base age " + std::to_string(base_age) + " outside the table's ages " +
                     std::to_string(ages.front()) + ".." + std::to_string(ages.back()));
  }

  // The first terminating row anywhere in the table fixes omega.
  for (std::size_t row = 0; row < ages.size(); ++row) {
    const bool ends = use_lx ? values[row] == 0.0 : values[row] == 1.0;
    if (!ends) continue;
    const int omega = use_lx ? ages[row] : ages[row] + 1;
    if (base_age >= omega) {
      throw InputError("base age " + std::to_string(base_age) +
                       " is at or beyond the limiting age " + std::to_string(omega));
    }
    break;
  }

  std::vector<double> yearly;
  bool terminated = false;
  for (std::size_t row = base_age - ages.front(); row < ages.size(); ++row) {
    double p = 0.0;
    if (use_lx) {
      if (values[row] == 0.0) {
        if (yearly.empty()) break;  // l = 0 at the base age itself
        terminated = true;
        break;
      }
      if (row + 1 == ages.size()) break;
      p = values[row + 1] / values[row];
      if (p > 1.0) {
        throw InputError("lx increases between ages " + std::to_string(ages[row]) + " and " +
                         std::to_string(ages[row] + 1));
      }
    } else {
      p = 1.0 - values[row];
    }
    if (p == 1.0) {
      throw InputError("zero mortality at age " + std::to_string(ages[row]) +
                       "; survival must strictly decrease");
    }
    yearly.push_back(p);
    if (p == 0.0) {
      terminated = true;
      break;
    }
  }
  if (yearly.empty()) {
    throw InputError("base age " + std::to_string(base_age) + " is at or beyond the limiting age");
  }
  if (!terminated) {
    throw InputError("life table never reaches a limiting age (no qx = 1 or lx = 0 row)");
  }
  return LifeTable(base_age, std::move(yearly), interest_rate);
}

LifeTable load_life_table(const std::filesystem::path& path, int base_age,
                          double interest_rate) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open life table '" + path.string() + "'");
  return parse_life_table(in, base_age, interest_rate);
}

}  // namespace poolfund
