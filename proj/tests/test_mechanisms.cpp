#include <gtest/gtest.h>

#include "emergent/mechanisms.hpp"
#include "emergent/oracle.hpp"
#include "emergent/profilegen.hpp"
#include "support.hpp"

using namespace emergent;

namespace {

void expect_matrix(const FractionalAllocation& f, const std::vector<std::vector<double>>& want) {
  for (Agent a = 0; a < f.n(); ++a)
    for (Item i = 0; i < f.n(); ++i) EXPECT_NEAR(f.at(a, i), want[a][i], 1e-12) << a << "," << i;
}

}  // namespace

TEST(Rsd, SingleAgent) {
  const PreferenceProfile p(std::vector<std::vector<Item>>{{0}});
  const auto m = rsd_draw(p, 5);
  EXPECT_EQ(m.assignment, (std::vector<Item>{0}));
  EXPECT_EQ(m.ranks, (std::vector<Rank>{1}));
  expect_matrix(rsd_allocation(p), {{1.0}});
}

TEST(Rsd, TwoAgentsSameTopItem) {
  const PreferenceProfile p({{0, 1}, {0, 1}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) EXPECT_DOUBLE_EQ(average_rank(rsd_draw(p, seed)), 1.5);
  expect_matrix(rsd_allocation(p), {{0.5, 0.5}, {0.5, 0.5}});
}

TEST(Rsd, DisjointTopsNeedNoLottery) {
  const auto p = fixtures::disjoint_tops_profile(3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) EXPECT_EQ(rsd_draw(p, seed).ranks, (std::vector<Rank>{1, 1, 1}));
}

TEST(Rsd, IdenticalPreferencesAreUniform) {
  const auto f = rsd_allocation(fixtures::identical_profile(3));
  for (Agent a = 0; a < 3; ++a)
    for (Item i = 0; i < 3; ++i) EXPECT_NEAR(f.at(a, i), 1.0 / 3.0, 1e-15);
}

TEST(Rsd, DrawFrequenciesMatchAllocation) {
  const PreferenceProfile p({{0, 1, 2}, {0, 2, 1}, {1, 0, 2}});
  const auto f = rsd_allocation(p);
  FractionalAllocation freq(3);
  const int draws = 60000;
  for (int k = 0; k < draws; ++k) {
    const auto m = rsd_draw(p, static_cast<std::uint64_t>(k));
    for (Agent a = 0; a < 3; ++a) freq.at(a, m.assignment[a]) += 1.0 / draws;
  }
  for (Agent a = 0; a < 3; ++a)
    for (Item i = 0; i < 3; ++i) {
      const double pr = f.at(a, i);
      EXPECT_NEAR(freq.at(a, i), pr, 4.0 * std::sqrt(pr * (1 - pr) / draws) + 1e-12);
    }
}

TEST(Rsd, TooLargeForExactEnumeration) {
  EXPECT_THROW(rsd_allocation(generate(9, 1, 0).profiles[0]), CapabilityError);
  EXPECT_NO_THROW(rsd_draw(generate(9, 1, 0).profiles[0], 1));
}

TEST(Ps, SmallExamples) {
  expect_matrix(probabilistic_serial(PreferenceProfile(std::vector<std::vector<Item>>{{0}})), {{1.0}});
  expect_matrix(probabilistic_serial(PreferenceProfile({{0, 1}, {0, 1}})), {{0.5, 0.5}, {0.5, 0.5}});
  expect_matrix(probabilistic_serial(PreferenceProfile({{0, 1}, {1, 0}})), {{1, 0}, {0, 1}});
  const auto f = probabilistic_serial(fixtures::identical_profile(3));
  for (Agent a = 0; a < 3; ++a)
    for (Item i = 0; i < 3; ++i) EXPECT_NEAR(f.at(a, i), 1.0 / 3.0, 1e-15);
}

TEST(Ps, HandWorkedContention) {
  // Agents 0 and 1 exhaust item 0 at t=1/2 while agent 2 eats half of item 1.
  // All three then finish item 1 by t=2/3 and split item 2.
  const PreferenceProfile p({{0, 1, 2}, {0, 1, 2}, {1, 0, 2}});
  const auto exact = probabilistic_serial_exact(p);
  using R = Rational;
  EXPECT_EQ(exact.at(0, 0), R(1, 2));
  EXPECT_EQ(exact.at(2, 1), R(2, 3));
  EXPECT_EQ(exact.at(0, 1), R(1, 6));
  EXPECT_EQ(exact.at(0, 2), R(1, 3));
  EXPECT_EQ(exact.at(2, 2), R(1, 3));
  EXPECT_TRUE(exact.to_fractional().is_doubly_stochastic(1e-15));
}

TEST(Ps, RationalSumsAreExactlyOne) {
  for (const auto& p : generate(5, 200, 3).profiles) {
    const auto f = probabilistic_serial_exact(p);
    for (std::size_t k = 0; k < 5; ++k) {
      Rational row(0), col(0);
      for (std::size_t j = 0; j < 5; ++j) {
        row += f.at(k, j);
        col += f.at(j, k);
      }
      ASSERT_EQ(row, Rational(1));
      ASSERT_EQ(col, Rational(1));
    }
  }
}

TEST(Ps, NoDiscreteDraws) {
  const PsMechanism ps;
  EXPECT_FALSE(ps.can_draw());
  EXPECT_THROW(ps.draw(PreferenceProfile(std::vector<std::vector<Item>>{{0}}), 0), CapabilityError);
}

TEST(Rm, SmallExamples) {
  EXPECT_EQ(rank_minimize(PreferenceProfile(std::vector<std::vector<Item>>{{0}})).total_rank(), 1);
  EXPECT_EQ(rank_minimize(PreferenceProfile({{0, 1}, {0, 1}})).total_rank(), 3);
  EXPECT_EQ(rank_minimize(fixtures::disjoint_tops_profile(4)).ranks, (std::vector<Rank>{1, 1, 1, 1}));
}

TEST(Rm, MatchesBruteForceMinimum) {
  for (std::size_t n = 2; n <= 6; ++n) {
    for (const auto& p : generate(n, 1000, 40 + n).profiles) {
      ASSERT_EQ(rank_minimize(p).total_rank(), enumerate_matchings(p).min_total_rank());
    }
  }
}

TEST(Rm, NeverWorseThanSerialDictatorship) {
  for (const auto& p : generate(6, 300, 8).profiles) {
    const int best = rank_minimize(p).total_rank();
    for (std::uint64_t s = 0; s < 5; ++s) ASSERT_LE(best, rsd_draw(p, s).total_rank());
  }
}

TEST(Rm, DeterministicTieBreak) {
  const auto p = fixtures::identical_profile(4);
  const auto first = rank_minimize(p);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(rank_minimize(p), first);
  EXPECT_EQ(first.total_rank(), 10);
}

TEST(Allocations, DoublyStochasticOnRandomProfiles) {
  for (std::size_t n = 2; n <= 7; ++n) {
    for (const auto& p : generate(n, 200, 70 + n).profiles) {
      ASSERT_TRUE(probabilistic_serial(p).is_doubly_stochastic(1e-9));
      ASSERT_TRUE(rsd_allocation(p).is_doubly_stochastic(1e-9));
    }
  }
}

TEST(Outcome, ExpectedRanksPerAgent) {
  const PreferenceProfile p({{0, 1}, {0, 1}});
  const auto o = MechanismOutcome::of(p, probabilistic_serial(p));
  EXPECT_EQ(o.expected_rank_per_agent, (std::vector<double>{1.5, 1.5}));
  const auto m = MechanismOutcome::of(rank_minimize(p));
  EXPECT_DOUBLE_EQ(m.expected_rank_per_agent[0] + m.expected_rank_per_agent[1], 3.0);
}
