#include "poolfund/savings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "poolfund/errors.hpp"

namespace poolfund {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

SavingsVector::SavingsVector(std::vector<double> amounts) : amounts_(std::move(amounts)) {
  if (amounts_.empty()) throw InputError("a savings vector needs at least one member");
  for (double s : amounts_) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw InputError("savings amounts must be finite and strictly positive");
    }
  }
}

SavingsVector SavingsVector::homogeneous(std::size_t n, double amount) {
  return SavingsVector(std::vector<double>(n, amount));
}

SavingsVector SavingsVector::two_group(std::size_t n_low, double low, std::size_t n_high,
                                       double high) {
  std::vector<double> amounts(n_low, low);
  amounts.insert(amounts.end(), n_high, high);
  return SavingsVector(std::move(amounts));
}

double SavingsVector::sum() const {
  return std::accumulate(amounts_.begin(), amounts_.end(), 0.0);
}

double SavingsVector::sum_of_squares() const {
  double total = 0.0;
  for (double s : amounts_) total += s * s;
  return total;
}

double SavingsVector::max() const { return *std::max_element(amounts_.begin(), amounts_.end()); }
double SavingsVector::min() const { return *std::min_element(amounts_.begin(), amounts_.end()); }

SavingsVector SavingsVector::scaled(double factor) const {
  std::vector<double> out(amounts_);
  for (double& s : out) s *= factor;
  return SavingsVector(std::move(out));
}

bool looks_like_savings_spec(std::string_view text) {
  return text.find('@') != std::string_view::npos;
}

std::vector<SavingsTerm> parse_savings_spec(std::string_view spec) {
  std::vector<SavingsTerm> terms;
  while (true) {
    const auto comma = spec.find(',');
    const auto term = trim(spec.substr(0, comma));
    const auto at = term.find('@');
    SavingsTerm parsed{};
    if (at == std::string_view::npos || !parse_double(term.substr(0, at), parsed.count) ||
        !parse_double(term.substr(at + 1), parsed.amount)) {
      throw InputError("malformed savings term '" + std::string(term) +
                       "' (expected count@amount)");
    }
    if (!(parsed.count > 0.0) || !(parsed.amount > 0.0) || !std::isfinite(parsed.count) ||
        !std::isfinite(parsed.amount)) {
      throw InputError("savings term '" + std::string(term) +
                       "' needs a positive count and a positive amount");
    }
    terms.push_back(parsed);
    if (comma == std::string_view::npos) break;
    spec.remove_prefix(comma + 1);
  }
  return terms;
}

SavingsVector expand_savings_terms(std::span<const SavingsTerm> terms) {
  std::vector<double> amounts;
  for (const auto& term : terms) {
    if (term.count != std::floor(term.count)) {
      throw InputError("member counts must be whole numbers to form a roster");
    }
    amounts.insert(amounts.end(), static_cast<std::size_t>(term.count), term.amount);
  }
  return SavingsVector(std::move(amounts));
}

SavingsVector read_savings_csv(std::string_view path) {
  std::ifstream in{std::string(path)};
  if (!in) throw InputError("cannot open savings file '" + std::string(path) + "'");
  std::vector<double> amounts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view field = trim(line);
    if (field.empty()) continue;
    field = trim(field.substr(0, field.find(',')));
    double value = 0.0;
    if (!parse_double(field, value)) {
      if (line_no == 1) continue;
      throw InputError("savings file line " + std::to_string(line_no) + ": '" +
                       std::string(field) + "' is not a number");
    }
    amounts.push_back(value);
  }
  return SavingsVector(std::move(amounts));
}

}  // namespace poolfund
