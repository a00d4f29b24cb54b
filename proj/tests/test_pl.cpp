#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "mpl/models/params_io.hpp"
#include "mpl/pl.hpp"
#include "mpl/sample.hpp"
#include "oracles.hpp"

using namespace mpl;
using namespace mpl::models;

namespace {

std::vector<State> sample_data(const TabularPmf& f, std::size_t n, std::uint64_t seed) {
  return sample_exact(f, n, {seed, 0});
}

}  // namespace

TEST(Schemes, Shapes) {
  for (std::size_t q = 2; q <= 6; ++q) {
    const auto ml = scheme_ml(q);
    EXPECT_EQ(ml.marginals().size(), 1u);
    EXPECT_TRUE(ml.conditionals().empty());
    EXPECT_EQ(scheme_composite_marginal(q).marginals().size(), q);
    EXPECT_EQ(scheme_full_conditionals(q).conditionals().size(), q);
    EXPECT_EQ(scheme_pairwise(q).marginals().size(), q * (q - 1) / 2);
  }
  const auto e3 = scheme_example1(3);
  EXPECT_EQ(e3.marginal_weight(SubsetId::of({1, 2, 3})), 1.0);
  EXPECT_EQ(e3.conditional_weight(PartitionId(SubsetId::of({1, 2}), SubsetId::of({3}))), 1.0);
  EXPECT_EQ(e3.terms().size(), 2u);
  EXPECT_EQ(scheme_by_name("pairwise", 4), scheme_pairwise(4));
  EXPECT_THROW(scheme_by_name("nope", 4), DomainError);
}

TEST(Schemes, CoefficientRules) {
  WeightScheme w;
  EXPECT_THROW(w.set_marginal(SubsetId::of({1}), -1.0), DomainError);
  EXPECT_THROW(w.set_marginal(SubsetId::of({1}), std::nan("")), DomainError);
  EXPECT_THROW(w.validate(2), DomainError);
  w.set_marginal(SubsetId::of({3}), 1.0);
  EXPECT_THROW(w.validate(2), DomainError);
  w.set_marginal(SubsetId::of({3}), 0.0);
  EXPECT_TRUE(w.empty());
  EXPECT_THROW(scheme_ml(2).scaled(0.0), DomainError);
}

TEST(Schemes, FileRoundTrip) {
  WeightScheme w;
  w.set_marginal(SubsetId::of({1, 2}), 0.25);
  w.set_conditional(PartitionId(SubsetId::of({3}), SubsetId::of({1, 4})), 1.0 / 3.0);
  w.set_conditional(PartitionId(SubsetId::of({2}), SubsetId::of({1})), 2.0);
  std::stringstream ss;
  write_scheme(ss, w);
  EXPECT_EQ(read_scheme(ss, 4), w);
  std::istringstream bad("d {1}|{2} 1\nc {1,2} x\n");
  try {
    read_scheme(bad, 2);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LogPl, MlSchemeIsTheLogLikelihood) {
  auto g = make_stream({41, 0});
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t q = 1 + inst % 5;
    const TabularPmf f(SupportSpec::binary(q), oracle::random_simplex(g, std::size_t{1} << q));
    const auto data = sample_data(f, 20, 100 + inst);
    double ll = 0.0;
    for (const auto& x : data) ll += std::log(f.prob(x));
    EXPECT_NEAR(log_pl(f, data, scheme_ml(q)).total, ll, 1e-12);
  }
}

TEST(LogPl, MatchesBruteForceOracleForEveryScheme) {
  auto g = make_stream({42, 0});
  for (std::size_t q = 2; q <= 4; ++q) {
    const auto joint = oracle::random_simplex(g, std::size_t{1} << q);
    const TabularPmf f(SupportSpec::binary(q), joint);
    const auto data = sample_data(f, 15, 200 + q);
    WeightScheme mixed;
    mixed.set_marginal(SubsetId(1), 0.7);
    mixed.set_conditional(PartitionId(SubsetId(2), SubsetId(1)), 1.3);
    for (const auto& w : {scheme_ml(q), scheme_composite_marginal(q), scheme_pairwise(q),
                          scheme_full_conditionals(q), scheme_example1(q), mixed})
      EXPECT_NEAR(log_pl(f, data, w).total, oracle::log_pl(joint, q, data, w), 1e-11);
  }
}

TEST(LogPl, FullConditionalsAgreeWithFvbmClosedForm) {
  auto g = make_stream({43, 0});
  for (int inst = 0; inst < 10; ++inst) {
    const std::size_t q = 2 + inst % 5;
    const auto p = oracle::random_fvbm(g, q, 1.0);
    const auto data = oracle::random_binary_data(g, q, 30);
    EXPECT_NEAR(log_pl(fvbm_joint(p), data, scheme_full_conditionals(q)).total,
                fvbm_logpl(data, p), 1e-10);
  }
}

TEST(LogPl, PairwiseOnUniform) {
  const auto f = TabularPmf::uniform(SupportSpec::binary(2));
  const std::vector<State> one{{0, 1}};
  EXPECT_NEAR(log_pl(f, one, scheme_pairwise(2)).total, std::log(0.25), 1e-15);
}

TEST(LogPl, CategoricalClosedFormMatchesExample1) {
  auto g = make_stream({44, 0});
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t q = 2 + inst % 4;
    const CategoricalParams p{oracle::random_simplex(g, q)};
    const auto data = sample_data(categorical_joint(p), 25, 300 + inst);
    EXPECT_NEAR(log_pl(p, data, scheme_example1(q)).total, categorical_logpl(data, p), 1e-12);
  }
}

TEST(LogPl, BreakdownSumsToTotal) {
  auto g = make_stream({45, 0});
  const TabularPmf f(SupportSpec::binary(3), oracle::random_simplex(g, 8));
  const auto data = sample_data(f, 40, 400);
  const auto v = log_pl(f, data, scheme_pairwise(3));
  double s = 0.0;
  for (const auto& [id, part] : v.breakdown) s += part;
  EXPECT_NEAR(s, v.total, 1e-12);
  EXPECT_EQ(v.breakdown.size(), 3u);
  EXPECT_FALSE(v.offense);
}

TEST(LogPl, ZeroProbabilityDatumNamesTermAndRow) {
  const TabularPmf f(SupportSpec::binary(2), {0.5, 0.5, 0.0, 0.0});
  const std::vector<State> data{{0, 0}, {0, 1}, {1, 0}};
  const auto v = log_pl(f, data, scheme_full_conditionals(2));
  EXPECT_EQ(v.total, -std::numeric_limits<double>::infinity());
  ASSERT_TRUE(v.offense);
  EXPECT_EQ(v.offense->datum, 2u);
  EXPECT_TRUE(std::holds_alternative<PartitionId>(v.offense->term));
}

TEST(LogPl, LinearInSchemeScale) {
  auto g = make_stream({46, 0});
  const TabularPmf f(SupportSpec::binary(3), oracle::random_simplex(g, 8));
  const auto data = sample_data(f, 30, 500);
  const auto w = scheme_pairwise(3);
  const double base = log_pl(f, data, w).total;
  for (double lambda : {0.5, 2.0, 10.0})
    EXPECT_NEAR(log_pl(f, data, w.scaled(lambda)).total, lambda * base, 1e-11 * std::abs(base));
}

TEST(PlObjective, ValueAndGradientAgreeWithLiteralForm) {
  auto g = make_stream({47, 0});
  for (std::size_t q = 2; q <= 4; ++q) {
    const auto spec = SupportSpec::binary(q);
    auto joint = oracle::random_simplex(g, std::size_t{1} << q);
    const auto data = sample_data(TabularPmf(spec, joint), 30, 600 + q);
    for (const auto& w : {scheme_pairwise(q), scheme_full_conditionals(q), scheme_example1(q)}) {
      const PlObjective obj(spec, data, w);
      std::vector<double> grad;
      EXPECT_NEAR(obj.evaluate(joint, &grad), log_pl(TabularPmf(spec, joint), data, w).total,
                  1e-11);
      const auto fd = oracle::central_diff(
          [&](const std::vector<double>& p) { return obj.evaluate(p); }, joint, 1e-7);
      EXPECT_LE(oracle::relative_error(grad, fd), 1e-6);
    }
  }
}

TEST(PseudoEntropy, Examples) {
  const auto u2 = TabularPmf::uniform(SupportSpec::binary(2));
  EXPECT_NEAR(pseudo_entropy(u2, scheme_ml(2)), 2 * std::numbers::ln2, 1e-15);
  // two rows of log 2 each, summed unweighted
  EXPECT_NEAR(pseudo_entropy(u2, scheme_full_conditionals(2)), 4 * std::numbers::ln2, 1e-15);
  EXPECT_NEAR(pseudo_entropy(u2, scheme_full_conditionals(2), EntropyForm::right_weighted),
              2 * std::numbers::ln2, 1e-15);
  const TabularPmf point(SupportSpec::binary(2), {1.0, 0.0, 0.0, 0.0});
  EXPECT_EQ(pseudo_entropy(point, scheme_ml(2)), 0.0);
  const CategoricalParams p{{0.2, 0.3, 0.5}};
  EXPECT_NEAR(pseudo_entropy(categorical_joint(p), scheme_example1(3)),
              categorical_pseudoentropy(p), 1e-14);
}

TEST(PseudoEntropy, NonNegativeAndBounded) {
  auto g = make_stream({48, 0});
  for (int inst = 0; inst < 30; ++inst) {
    const std::size_t q = 2 + inst % 3;
    const TabularPmf f(SupportSpec::binary(q), oracle::random_simplex(g, std::size_t{1} << q));
    for (const auto& w : {scheme_ml(q), scheme_composite_marginal(q), scheme_example1(q)}) {
      const auto rep = entropy_term_bound_check(f, w);
      EXPECT_GE(rep.entropy, 0.0);
      EXPECT_TRUE(rep.finite);
      EXPECT_TRUE(rep.all_in_range);
      EXPECT_LE(rep.max_term, kEntropyTermMax);
      EXPECT_LE(rep.entropy, rep.bound);
      EXPECT_GE(pseudo_entropy(f, w, EntropyForm::right_weighted), 0.0);
    }
  }
  // y = 1/e attains the summand maximum
  const double y = 1.0 / std::numbers::e;
  const TabularPmf f(SupportSpec::binary(1), {y, 1.0 - y});
  EXPECT_NEAR(entropy_term_bound_check(f, scheme_ml(1)).max_term, kEntropyTermMax, 1e-16);
}
