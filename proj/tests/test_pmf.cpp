#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mpl/models/fvbm.hpp"
#include "mpl/pmf.hpp"
#include "mpl/sample.hpp"
#include "oracles.hpp"

using namespace mpl;

namespace {

TabularPmf table_0123() {
  return TabularPmf(SupportSpec::binary(2), {0.1, 0.2, 0.3, 0.4});
}

}  // namespace

TEST(TabularPmf, Validation) {
  EXPECT_THROW(TabularPmf(SupportSpec::binary(1), {0.5}), StructuralError);
  EXPECT_THROW(TabularPmf(SupportSpec::binary(1), {0.5, 0.6}), DomainError);
  EXPECT_THROW(TabularPmf(SupportSpec::binary(1), {1.5, -0.5}), DomainError);
  EXPECT_NO_THROW(TabularPmf(SupportSpec::binary(1), {1.0, 0.0}));
  const auto u = TabularPmf::uniform(SupportSpec::binary(3));
  EXPECT_DOUBLE_EQ(u[5], 0.125);
}

TEST(Marginalize, Examples) {
  const auto u = marginalize(TabularPmf::uniform(SupportSpec::binary(2)), SubsetId::of({1}));
  EXPECT_DOUBLE_EQ(u.probs[0], 0.5);
  EXPECT_DOUBLE_EQ(u.probs[1], 0.5);
  const auto m = marginalize(table_0123(), SubsetId::of({1}));
  EXPECT_NEAR(m.probs[0], 0.3, 1e-15);
  EXPECT_NEAR(m.probs[1], 0.7, 1e-15);
  const auto full = marginalize(table_0123(), SubsetId::of({1, 2}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(full.probs[i], table_0123()[i]);
  EXPECT_THROW(marginalize(table_0123(), SubsetId::of({3})), DomainError);
}

TEST(Condition, Examples) {
  const auto u = condition(TabularPmf::uniform(SupportSpec::binary(2)),
                           PartitionId(SubsetId::of({1}), SubsetId::of({2})));
  for (double v : u.probs) EXPECT_DOUBLE_EQ(v, 0.5);
  const auto c = condition(table_0123(), PartitionId(SubsetId::of({1}), SubsetId::of({2})));
  EXPECT_NEAR(c.row(1)[0], 0.2 / 0.6, 1e-15);
  EXPECT_NEAR(c.row(1)[1], 0.4 / 0.6, 1e-15);
  EXPECT_NEAR(c.right_probs[1], 0.6, 1e-15);
}

TEST(Condition, ZeroProbabilityEventIsUndefined) {
  const TabularPmf f(SupportSpec::binary(2), {0.0, 0.5, 0.0, 0.5});
  const auto c = condition(f, PartitionId(SubsetId::of({1}), SubsetId::of({2})));
  EXPECT_FALSE(c.is_defined(0));
  EXPECT_TRUE(c.is_defined(1));
  EXPECT_TRUE(std::isnan(c.row(0)[0]));
}

TEST(Marginalize, TowerProperty) {
  auto g = make_stream({11, 0});
  const SupportSpec spec({{0, 1, 2}, {0, 1}, {0, 1, 2, 3}, {0, 1}, {5, 6}, {0, 1, 2}});
  const TabularPmf f(spec, oracle::random_simplex(g, spec.state_count()));
  for (CoordMask big = 1; big < 64; ++big) {
    const auto mb = marginalize(f, SubsetId(big));
    const TabularPmf fb(mb.spec, mb.probs);
    // every sub-subset, re-indexed into the restricted support
    for (CoordMask small = big; small > 0; small = (small - 1) & big) {
      CoordMask inner = 0;
      std::size_t pos = 0;
      for (std::size_t k = 0; k < 6; ++k)
        if (big >> k & 1U) {
          if (small >> k & 1U) inner |= CoordMask{1} << pos;
          ++pos;
        }
      const auto twice = marginalize(fb, SubsetId(inner));
      const auto once = marginalize(f, SubsetId(small));
      ASSERT_EQ(twice.probs.size(), once.probs.size());
      for (std::size_t i = 0; i < once.probs.size(); ++i)
        EXPECT_NEAR(twice.probs[i], once.probs[i], 1e-14);
    }
  }
}

TEST(Condition, LawOfTotalProbability) {
  auto g = make_stream({12, 0});
  const SupportSpec spec({{0, 1, 2}, {0, 1}, {0, 1, 2}, {0, 1}});
  const TabularPmf f(spec, oracle::random_simplex(g, spec.state_count()));
  for (const auto& t : enumerate_partitions(spec)) {
    const auto c = condition(f, t);
    const auto joint = marginalize(f, SubsetId(t.joint_mask()));
    // rebuild the joint marginal over left u right from conditional x right marginal
    const auto sub = spec.restrict(t.joint_mask());
    const auto pl = projection_map(sub, [&] {
      CoordMask m = 0;
      std::size_t pos = 0;
      for (std::size_t k = 0; k < 4; ++k)
        if (t.joint_mask() >> k & 1U) {
          if (t.left().mask() >> k & 1U) m |= CoordMask{1} << pos;
          ++pos;
        }
      return m;
    }());
    const auto pr = projection_map(sub, [&] {
      CoordMask m = 0;
      std::size_t pos = 0;
      for (std::size_t k = 0; k < 4; ++k)
        if (t.joint_mask() >> k & 1U) {
          if (t.right().mask() >> k & 1U) m |= CoordMask{1} << pos;
          ++pos;
        }
      return m;
    }());
    for (std::size_t i = 0; i < joint.probs.size(); ++i)
      EXPECT_NEAR(c.row(pr[i])[pl[i]] * c.right_probs[pr[i]], joint.probs[i], 1e-12);
    for (std::size_t r = 0; r < c.right_count(); ++r) {
      double s = 0.0;
      for (double v : c.row(r)) s += v;
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Empirical, Examples) {
  const auto b2 = SupportSpec::binary(2);
  const std::vector<State> zeros(10, State{0, 0});
  const std::vector<TermId> s2{SubsetId::of({2})};
  const auto t = empirical_tables(b2, zeros, s2);
  EXPECT_EQ(t[0].proportions()[0], 1.0);
  EXPECT_EQ(t[0].m, 10u);

  const std::vector<State> data{{0, 0}, {0, 1}, {1, 1}, {1, 1}};
  const std::vector<TermId> s1{SubsetId::of({1})};
  const auto p = empirical_tables(b2, data, s1)[0].proportions();
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.5);
  const auto q2 = empirical_tables(b2, data, s2)[0].proportions();
  EXPECT_EQ(q2[0], 0.25);
  EXPECT_EQ(q2[1], 0.75);

  EXPECT_TRUE(empirical_tables(b2, data, std::vector<TermId>{}).empty());

  const std::vector<TermId> cond{PartitionId(SubsetId::of({1}), SubsetId::of({2}))};
  const auto c = empirical_tables(b2, data, cond)[0];
  EXPECT_EQ(c.counts, (std::vector<std::uint64_t>{1, 0, 1, 2}));
}

TEST(Empirical, OutOfSupportNamesRow) {
  const std::vector<State> data{{0, 0}, {0, 3}};
  const std::vector<TermId> ids{SubsetId::of({1})};
  try {
    empirical_tables(SupportSpec::binary(2), data, ids);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(Empirical, ProportionsApproachMarginals) {
  auto g = make_stream({13, 0});
  const auto spec = SupportSpec::binary(4);
  const TabularPmf f(spec, oracle::random_simplex(g, 16));
  const auto ids = std::vector<TermId>{SubsetId::of({1, 3}), SubsetId::of({2, 4})};
  auto err = [&](std::size_t n) {
    const auto data = sample_exact(f, n, {13, 1});
    double e = 0.0;
    const auto tabs = empirical_tables(spec, data, ids);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      const auto m = marginalize(f, std::get<SubsetId>(ids[j]));
      const auto p = tabs[j].proportions();
      for (std::size_t i = 0; i < p.size(); ++i) e = std::max(e, std::abs(p[i] - m.probs[i]));
    }
    return e;
  };
  EXPECT_LT(err(100000), err(1000));
}

TEST(Compatibility, SelfConsistentPassesAtZeroTolerance) {
  const auto f = table_0123();
  const std::vector<MarginalTable> m{marginalize(f, SubsetId::of({1})),
                                     marginalize(f, SubsetId::of({2}))};
  const std::vector<ConditionalTable> c{
      condition(f, PartitionId(SubsetId::of({1}), SubsetId::of({2})))};
  const auto rep = compatibility_check(f, m, c, 0.0);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.max_deviation, 0.0);
}

TEST(Compatibility, PerturbedMarginalFails) {
  const auto f = table_0123();
  auto m = marginalize(f, SubsetId::of({1}));
  m.probs[0] += 0.01;
  const auto rep = compatibility_check(f, std::vector<MarginalTable>{m}, {}, 1e-12);
  EXPECT_FALSE(rep.pass);
  EXPECT_NEAR(rep.max_deviation, 0.01, 1e-15);
}

TEST(Compatibility, ShapeMismatchIsStructural) {
  const auto f = table_0123();
  auto m = marginalize(f, SubsetId::of({1}));
  m.probs.push_back(0.0);
  EXPECT_THROW(compatibility_check(f, std::vector<MarginalTable>{m}, {}, 0.0), StructuralError);
}

TEST(Compatibility, FvbmClosedFormConditionalsMatchJoint) {
  auto g = make_stream({14, 0});
  const auto p = oracle::random_fvbm(g, 3, 1.0);
  const auto f = models::fvbm_joint(p);
  std::vector<ConditionalTable> claimed;
  for (std::size_t k = 0; k < 3; ++k) {
    const CoordMask bit = CoordMask{1} << k;
    const PartitionId t(SubsetId(bit), SubsetId(7 & ~bit));
    auto c = condition(f, t);
    // overwrite every row with the closed-form single-site conditional
    for (std::size_t r = 0; r < c.right_count(); ++r) {
      const auto rest = state_at(c.right_spec, r);
      State x(3);
      for (std::size_t l = 0, j = 0; l < 3; ++l) x[l] = l == k ? 1 : rest[j++];
      const double p1 = models::fvbm_conditional(x, k, p);
      c.probs[r * 2 + 0] = 1.0 - p1;
      c.probs[r * 2 + 1] = p1;
    }
    claimed.push_back(std::move(c));
  }
  const auto rep = compatibility_check(f, {}, claimed, 1e-12);
  EXPECT_TRUE(rep.pass) << rep.max_deviation;
}

TEST(PmfCsv, RoundTrip) {
  auto g = make_stream({15, 0});
  const SupportSpec spec({{0, 1, 2}, {-1, 4}});
  const TabularPmf f(spec, oracle::random_simplex(g, 6));
  std::stringstream ss;
  write_pmf_csv(ss, f);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "x1,x2,probability");
  const auto back = read_pmf_csv(ss);
  EXPECT_EQ(back.spec(), spec);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(back[i], f[i]);
}

TEST(PmfCsv, Errors) {
  std::istringstream bad_header("a,probability\n0,1\n");
  EXPECT_THROW(read_pmf_csv(bad_header), ParseError);
  std::istringstream bad_order("x1,x2,probability\n0,0,0.25\n1,0,0.25\n0,1,0.25\n1,1,0.25\n");
  try {
    read_pmf_csv(bad_order);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}
