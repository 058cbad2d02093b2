#include <gtest/gtest.h>

#include <algorithm>

#include "emergent/core.hpp"
#include "support.hpp"

using namespace emergent;

TEST(RankOf, ExamplesFromListPositions) {
  const PreferenceProfile p({{2, 0, 1}, {0, 1, 2}, {1, 2, 0}});
  EXPECT_EQ(rank_of(p, 0, 2), 1);
  EXPECT_EQ(rank_of(p, 0, 1), 3);
  EXPECT_EQ(rank_of(p, 0, 0), 2);
}

TEST(RankOf, InvertsEveryRowOfEveryN3Profile) {
  for (const auto& p : fixtures::all_profiles(3)) {
    for (Agent a = 0; a < 3; ++a) {
      const auto row = p.row(a);
      for (std::size_t k = 0; k < 3; ++k) {
        const auto pos = std::find(row.begin(), row.end(), row[k]) - row.begin();
        ASSERT_EQ(rank_of(p, a, row[k]), pos + 1);
      }
      std::vector<Rank> ranks;
      for (Item i = 0; i < 3; ++i) ranks.push_back(rank_of(p, a, i));
      std::sort(ranks.begin(), ranks.end());
      ASSERT_EQ(ranks, (std::vector<Rank>{1, 2, 3}));
    }
  }
}

TEST(RankOf, OutOfRangeIsInputError) {
  const PreferenceProfile p({{0, 1}, {1, 0}});
  EXPECT_THROW(rank_of(p, 2, 0), InputError);
  EXPECT_THROW(rank_of(p, 0, 5), InputError);
}

TEST(Profile, RejectsMalformedRows) {
  EXPECT_THROW(PreferenceProfile({{0, 0, 2}, {0, 1, 2}, {0, 1, 2}}), InputError);
  EXPECT_THROW(PreferenceProfile({{0, 1}, {0}}), InputError);
  EXPECT_THROW(PreferenceProfile(std::vector<std::vector<Item>>{}), InputError);
  EXPECT_THROW(PreferenceProfile({{0, 3}, {1, 0}}), InputError);
}

TEST(Profile, WithReportReplacesOneRow) {
  const PreferenceProfile p({{0, 1, 2}, {1, 2, 0}, {2, 0, 1}});
  const std::vector<Item> report{2, 1, 0};
  const auto q = p.with_report(1, report);
  EXPECT_EQ(q.rows()[1], report);
  EXPECT_EQ(q.rows()[0], p.rows()[0]);
  EXPECT_EQ(q.rows()[2], p.rows()[2]);
  EXPECT_EQ(p.rows()[1], (std::vector<Item>{1, 2, 0}));
}

TEST(AverageRank, Examples) {
  const PreferenceProfile one(std::vector<std::vector<Item>>{{0}});
  EXPECT_DOUBLE_EQ(average_rank(Matching::from_assignment(one, {0})), 1.0);

  const PreferenceProfile p({{0, 1, 2}, {0, 1, 2}, {0, 1, 2}});
  EXPECT_DOUBLE_EQ(average_rank(Matching::from_assignment(p, {0, 1, 2})), 2.0);

  std::vector<Item> perm{0, 1, 2};
  do {
    EXPECT_DOUBLE_EQ(average_rank(Matching::from_assignment(p, perm)), 2.0);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(AverageRank, AlwaysWithinOneToN) {
  for (const auto& p : fixtures::all_profiles(3)) {
    std::vector<Item> perm{0, 1, 2};
    do {
      const double ar = average_rank(Matching::from_assignment(p, perm));
      ASSERT_GE(ar, 1.0);
      ASSERT_LE(ar, 3.0);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST(Matching, RejectsNonPermutation) {
  const PreferenceProfile p({{0, 1}, {1, 0}});
  EXPECT_THROW(Matching::from_assignment(p, {0, 0}), InputError);
  EXPECT_THROW(Matching::from_assignment(p, {0}), InputError);
}

TEST(Matching, RanksFollowTheProfile) {
  const PreferenceProfile p({{2, 0, 1}, {0, 1, 2}, {1, 2, 0}});
  const auto m = Matching::from_assignment(p, {1, 0, 2});
  EXPECT_EQ(m.ranks, (std::vector<Rank>{3, 1, 2}));
  EXPECT_EQ(m.total_rank(), 6);
}

TEST(Utility, BordaExamples) {
  const UtilityModel u;
  EXPECT_DOUBLE_EQ(u.from_rank(1, 3), 3.0);
  EXPECT_DOUBLE_EQ(u.from_rank(3, 3), 1.0);
  EXPECT_DOUBLE_EQ(u.from_rank(2, 5), 4.0);
  const PreferenceProfile p({{2, 0, 1}, {0, 1, 2}, {1, 2, 0}});
  EXPECT_DOUBLE_EQ(utility_of(u, p, 0, 2), 3.0);
  EXPECT_DOUBLE_EQ(utility_of(u, p, 0, 1), 1.0);
}

TEST(Utility, StrictlyDecreasingAndPositive) {
  const UtilityModel u;
  for (std::size_t n = 1; n <= 8; ++n) {
    for (Rank r = 1; r <= static_cast<Rank>(n); ++r) {
      EXPECT_GE(u.from_rank(r, n), 1.0);
      if (r > 1) {
        EXPECT_GT(u.from_rank(r - 1, n), u.from_rank(r, n));
      }
    }
  }
}

TEST(FractionalAllocation, FromMatchingIsDoublyStochastic) {
  const PreferenceProfile p({{2, 0, 1}, {0, 1, 2}, {1, 2, 0}});
  const auto f = FractionalAllocation::from_matching(Matching::from_assignment(p, {2, 0, 1}));
  EXPECT_TRUE(f.is_doubly_stochastic());
  EXPECT_DOUBLE_EQ(f.at(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(expected_average_rank(p, f), 1.0);
  FractionalAllocation bad(2);
  bad.at(0, 0) = 1.0;
  EXPECT_FALSE(bad.is_doubly_stochastic());
}

TEST(ExpectedUtility, WeighsTrueRanks) {
  const PreferenceProfile p({{0, 1}, {0, 1}});
  FractionalAllocation half(2);
  for (Agent a = 0; a < 2; ++a)
    for (Item i = 0; i < 2; ++i) half.at(a, i) = 0.5;
  EXPECT_DOUBLE_EQ(expected_utility(UtilityModel{}, p, half, 0), 1.5);
  EXPECT_DOUBLE_EQ(expected_rank(p, half, 1), 1.5);
}
