#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "poolfund/errors.hpp"
#include "poolfund/savings.hpp"

using namespace poolfund;

namespace {

std::string temp_file(const std::string& name, const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << contents;
  return path.string();
}

}  // namespace

TEST(Savings, RejectsEmptyAndNonPositive) {
  EXPECT_THROW(SavingsVector({}), InputError);
  EXPECT_THROW(SavingsVector({1.0, 0.0}), InputError);
  EXPECT_THROW(SavingsVector({-1.0}), InputError);
  EXPECT_THROW(SavingsVector({1.0, std::numeric_limits<double>::infinity()}), InputError);
  EXPECT_THROW(SavingsVector({std::numeric_limits<double>::quiet_NaN()}), InputError);
}

TEST(Savings, Aggregates) {
  const SavingsVector s({3.0, 4.0});
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.sum(), 7.0);
  EXPECT_EQ(s.sum_of_squares(), 25.0);
  EXPECT_EQ(s.min(), 3.0);
  EXPECT_EQ(s.max(), 4.0);
  EXPECT_EQ(s.scaled(2.0).sum(), 14.0);
}

TEST(Savings, TwoGroupLayout) {
  const auto s = SavingsVector::two_group(2, 1.0, 3, 10.0);
  ASSERT_EQ(s.size(), 5u);
  EXPECT_EQ(s[0], 1.0);
  EXPECT_EQ(s[1], 1.0);
  EXPECT_EQ(s[2], 10.0);
  EXPECT_THROW(SavingsVector::two_group(0, 1.0, 0, 2.0), InputError);
  EXPECT_EQ(SavingsVector::homogeneous(4, 2.5).sum(), 10.0);
}

TEST(Savings, InlineSpec) {
  EXPECT_TRUE(looks_like_savings_spec("800@1,200@10"));
  EXPECT_FALSE(looks_like_savings_spec("roster.csv"));
  const auto terms = parse_savings_spec("800@1, 200@10");
  ASSERT_EQ(terms.size(), 2u);
  EXPECT_EQ(terms[0].count, 800.0);
  EXPECT_EQ(terms[1].amount, 10.0);
  const auto roster = expand_savings_terms(terms);
  EXPECT_EQ(roster.size(), 1000u);
  EXPECT_EQ(roster.sum(), 2800.0);
}

TEST(Savings, FractionalCountsParseButDoNotExpand) {
  const auto terms = parse_savings_spec("2.5@1");
  EXPECT_EQ(terms[0].count, 2.5);
  EXPECT_THROW(expand_savings_terms(terms), InputError);
}

TEST(Savings, MalformedSpecs) {
  for (const char* bad : {"", "@", "10@", "@5", "ten@5", "10@five", "10@5,", "0@5", "10@0",
                          "-1@5", "10@-5", "10@5@6"}) {
    EXPECT_THROW(parse_savings_spec(bad), InputError) << bad;
  }
}

TEST(Savings, CsvWithHeaderAndExtraColumns) {
  const auto path = temp_file("poolfund_savings_a.csv", "amount,name\n100,a\n\n200,b\n");
  const auto s = read_savings_csv(path);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.sum(), 300.0);
  std::remove(path.c_str());
}

TEST(Savings, CsvErrors) {
  EXPECT_THROW(read_savings_csv("/nonexistent/savings.csv"), InputError);
  const auto bad = temp_file("poolfund_savings_b.csv", "100\nabc\n");
  EXPECT_THROW(read_savings_csv(bad), InputError);
  const auto empty = temp_file("poolfund_savings_c.csv", "amount\n");
  EXPECT_THROW(read_savings_csv(empty), InputError);
  const auto negative = temp_file("poolfund_savings_d.csv", "5\n-1\n");
  EXPECT_THROW(read_savings_csv(negative), InputError);
  std::remove(bad.c_str());
  std::remove(empty.c_str());
  std::remove(negative.c_str());
}
