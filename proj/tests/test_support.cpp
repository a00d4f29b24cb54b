#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "mpl/support.hpp"
#include "oracles.hpp"

using namespace mpl;

TEST(Subsets, CountIsTwoToTheQMinusOne) {
  for (std::size_t q = 1; q <= 10; ++q) {
    const auto subsets = enumerate_subsets(SupportSpec::binary(q));
    ASSERT_EQ(subsets.size(), (std::size_t{1} << q) - 1) << "q=" << q;
    for (std::size_t i = 0; i < subsets.size(); ++i) EXPECT_EQ(subsets[i].mask(), i + 1);
  }
}

TEST(Subsets, SmallCases) {
  const auto one = enumerate_subsets(SupportSpec::binary(1));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(to_string(one[0]), "{1}");
  EXPECT_EQ(enumerate_subsets(SupportSpec::binary(3)).size(), 7u);
  const auto five = enumerate_subsets(SupportSpec::binary(5));
  std::set<CoordMask> seen;
  for (auto s : five) {
    EXPECT_NE(s.mask(), 0u);
    seen.insert(s.mask());
  }
  EXPECT_EQ(seen.size(), 31u);
}

TEST(Partitions, MatchBruteForceScanExactly) {
  for (std::size_t q = 1; q <= 10; ++q) {
    const auto got = enumerate_partitions(SupportSpec::binary(q));
    const auto want = oracle::partitions(q);
    ASSERT_EQ(got.size(), want.size()) << "q=" << q;
    std::uint64_t closed = 1;
    for (std::size_t k = 0; k < q; ++k) closed *= 3;
    closed = closed - (std::uint64_t{1} << (q + 1)) + 1;
    EXPECT_EQ(got.size(), closed);
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].left().mask(), want[i].first);
      EXPECT_EQ(got[i].right().mask(), want[i].second);
    }
  }
}

TEST(Partitions, SmallCases) {
  EXPECT_TRUE(enumerate_partitions(SupportSpec::binary(1)).empty());
  const auto two = enumerate_partitions(SupportSpec::binary(2));
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(to_string(two[0]), "{1}|{2}");
  EXPECT_EQ(to_string(two[1]), "{2}|{1}");
  EXPECT_EQ(enumerate_partitions(SupportSpec::binary(3)).size(), 12u);
}

TEST(Enumeration, CapsRefuseLargeQ) {
  EXPECT_THROW(enumerate_subsets(SupportSpec::binary(21)), CapacityError);
  EXPECT_THROW(enumerate_partitions(SupportSpec::binary(13)), CapacityError);
  EXPECT_NO_THROW(enumerate_subsets(SupportSpec::binary(4), 4));
  EXPECT_THROW(enumerate_subsets(SupportSpec::binary(5), 4), CapacityError);
}

TEST(Enumeration, SerializedOrderIsStable) {
  auto dump = [] {
    std::ostringstream os;
    for (const auto& t : enumerate_partitions(SupportSpec::binary(5))) os << to_string(t) << ';';
    return os.str();
  };
  EXPECT_EQ(dump(), dump());
}

TEST(StateIndex, Examples) {
  const auto b3 = SupportSpec::binary(3);
  EXPECT_EQ(state_index(b3, {0, 0, 0}), 0u);
  EXPECT_EQ(state_index(b3, {1, 1, 1}), 7u);
  EXPECT_EQ(state_index(b3, {1, 0, 0}), 4u);
  const SupportSpec mixed({{0, 1, 2}, {0, 1}});
  EXPECT_EQ(mixed.state_count(), 6u);
}

TEST(StateIndex, RoundTripOverFullSupport) {
  const SupportSpec mixed({{0, 1, 2}, {-1, 5}, {7}, {3, 1, 4, 2}});
  for (std::uint64_t i = 0; i < mixed.state_count(); ++i)
    EXPECT_EQ(state_index(mixed, state_at(mixed, i)), i);
  const auto b16 = SupportSpec::binary(16);
  for (std::uint64_t i = 0; i < b16.state_count(); ++i)
    ASSERT_EQ(state_index(b16, state_at(b16, i)), i);
}

TEST(StateIndex, OutOfSupportNamesCoordinate) {
  const auto b3 = SupportSpec::binary(3);
  try {
    state_index(b3, {0, 2, 0});
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("x2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(state_index(b3, {0, 1}), DomainError);
  EXPECT_THROW(state_at(b3, 8), DomainError);
}

TEST(SupportSpec, Invariants) {
  EXPECT_THROW(SupportSpec(std::vector<std::vector<int>>{}), DomainError);
  EXPECT_THROW(SupportSpec({{0, 1}, {}}), DomainError);
  EXPECT_THROW(SupportSpec({{0, 1, 1}}), DomainError);
  EXPECT_THROW(SupportSpec(std::vector<std::vector<int>>(41, {0, 1, 2})), CapacityError);
  EXPECT_TRUE(SupportSpec::binary(4).is_binary());
  EXPECT_FALSE(SupportSpec({{0, 1, 2}}).is_binary());
}

TEST(ProjectionMap, MatchesDirectRestriction) {
  const SupportSpec spec({{0, 1, 2}, {0, 1}, {4, 5, 6, 7}});
  for (CoordMask mask = 1; mask < 8; ++mask) {
    const auto proj = projection_map(spec, mask);
    const auto sub = spec.restrict(mask);
    for (std::uint64_t i = 0; i < spec.state_count(); ++i) {
      const auto x = state_at(spec, i);
      State y;
      for (std::size_t k = 0; k < 3; ++k)
        if (mask >> k & 1U) y.push_back(x[k]);
      EXPECT_EQ(proj[i], state_index(sub, y));
    }
  }
}

TEST(Ids, ValidationAndOrdering) {
  EXPECT_THROW(SubsetId(0), DomainError);
  EXPECT_THROW(PartitionId(SubsetId::of({1, 2}), SubsetId::of({2})), DomainError);
  const PartitionId a(SubsetId::of({1}), SubsetId::of({2}));
  const PartitionId b(SubsetId::of({2}), SubsetId::of({1}));
  EXPECT_NE(a, b);
  EXPECT_EQ(SubsetId::of({1, 3}).size(), 2u);
  EXPECT_TRUE(SubsetId::of({3}).fits(3));
  EXPECT_FALSE(SubsetId::of({4}).fits(3));
}

TEST(Ids, TextRoundTrip) {
  for (const auto& t : enumerate_partitions(SupportSpec::binary(4)))
    EXPECT_EQ(parse_partition(to_string(t)), t);
  for (const auto& s : enumerate_subsets(SupportSpec::binary(5)))
    EXPECT_EQ(parse_subset(to_string(s)), s);
  EXPECT_EQ(to_string(SubsetId::of({1, 3})), "{1,3}");
  EXPECT_EQ(parse_subset(" { 3, 1 } "), SubsetId::of({1, 3}));
  EXPECT_THROW(parse_subset("{}"), DomainError);
  EXPECT_THROW(parse_subset("{0}"), DomainError);
  EXPECT_THROW(parse_subset("{1,1}"), DomainError);
  EXPECT_THROW(parse_subset("1,2"), DomainError);
  EXPECT_THROW(parse_partition("{1}{2}"), DomainError);
  EXPECT_THROW(parse_partition("{1}|{1}"), DomainError);
}
