#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "hebbmem/plasticity.hpp"
#include "oracles.hpp"

namespace hebbmem {
namespace {

Pattern from_bits(const Layout& layout, std::vector<int> bits) {
  Pattern p(layout);
  for (std::size_t i = 0; i < bits.size(); ++i) p.bits[i] = static_cast<std::uint8_t>(bits[i]);
  return p;
}

TEST(Epsilon, Values) {
  EXPECT_DOUBLE_EQ(epsilon_for(Rule::BCPNN, 0), 1.0);
  EXPECT_DOUBLE_EQ(epsilon_for(Rule::BCPNN, 3), 0.25);
  EXPECT_DOUBLE_EQ(epsilon_for(Rule::COV, 1000), 1e-7);
}

TEST(TrainPattern, CountersAccumulate) {
  const auto layout = Layout::modular(2, 2);
  SynapticState s(4);
  train_pattern(s, from_bits(layout, {1, 0, 1, 0}));
  EXPECT_EQ(s.c, 1u);
  EXPECT_EQ(s.c_i, (std::vector<std::uint32_t>{1, 0, 1, 0}));
  EXPECT_EQ(s.c_ij(0, 2), 1u);

  train_pattern(s, from_bits(layout, {1, 0, 0, 1}));
  EXPECT_EQ(s.c, 2u);
  EXPECT_EQ(s.c_i, (std::vector<std::uint32_t>{2, 0, 1, 1}));
  EXPECT_EQ(s.c_ij(0, 2), 1u);
  EXPECT_EQ(s.c_ij(0, 3), 1u);
}

TEST(TrainPattern, RejectsWrongSize) {
  SynapticState s(4);
  EXPECT_THROW(train_pattern(s, Pattern(Layout::modular(3, 3))), std::invalid_argument);
}

TEST(TrainPattern, IncrementalEqualsBatch) {
  Rng rng(RngStream{1, 1});
  const auto layout = Layout::modular(5, 4);
  std::vector<Pattern> ps;
  std::vector<std::vector<int>> dense;
  SynapticState s(layout.N());
  for (int k = 0; k < 50; ++k) {
    ps.push_back(generate_hrand(layout, rng));
    dense.emplace_back(ps.back().bits.begin(), ps.back().bits.end());
    const auto before = s;
    train_pattern(s, ps.back());
    for (std::size_t i = 0; i < s.c_ij.data.size(); ++i) ASSERT_GE(s.c_ij.data[i], before.c_ij.data[i]);
  }
  const auto b = oracle::batch_counters(dense, layout.N());
  EXPECT_EQ(s.c, b.c);
  EXPECT_EQ(s.c_i, b.c_i);
  EXPECT_EQ(s.c_ij.data, b.c_ij);
  for (std::size_t i = 0; i < layout.N(); ++i) EXPECT_EQ(s.c_ij(i, i), s.c_i[i]);
}

TEST(PEstimates, FloorsAndRatios) {
  const auto layout = Layout::modular(2, 2);
  SynapticState s(4);
  train_pattern(s, from_bits(layout, {1, 0, 1, 0}));
  train_pattern(s, from_bits(layout, {1, 0, 0, 1}));
  const auto bc = p_estimates(s, Rule::BCPNN);
  EXPECT_DOUBLE_EQ(bc.epsilon, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(bc.p_i[0], 1.0);
  EXPECT_DOUBLE_EQ(bc.p_i[1], 1.0 / 3.0);
  const auto cov = p_estimates(s, Rule::COV);
  EXPECT_DOUBLE_EQ(cov.p_ij(0, 2), 0.5);
  EXPECT_DOUBLE_EQ(cov.p_ij(1, 3), 1e-14);
}

TEST(PEstimates, EmptyStateIsDegenerate) {
  SynapticState s(4);
  EXPECT_THROW(p_estimates(s, Rule::BCPNN), DegenerateStateError);
  EXPECT_THROW(compute_weights(s, Rule::HEBB, Layout::modular(2, 2)), DegenerateStateError);
}

TEST(ComputeWeights, CovarianceVanishesForIndependentUnits) {
  // p_0 = p_2 = 1/2 and p_02 = 1/4 after these four patterns.
  const auto layout = Layout::modular(2, 2);
  SynapticState s(4);
  for (auto bits : std::vector<std::vector<int>>{{1, 0, 1, 0}, {1, 0, 0, 1}, {0, 1, 1, 0}, {0, 1, 0, 1}})
    train_pattern(s, from_bits(layout, bits));
  const auto ws = compute_weights(s, Rule::COV, layout);
  EXPECT_DOUBLE_EQ(ws.w(0, 2), 0.0);
  const auto hopf = compute_weights(s, Rule::HOPF, layout);  // a = 1/M = 1/2
  EXPECT_DOUBLE_EQ(hopf.w(0, 2), 0.25 - 0.5 * (0.5 + 0.5) + 0.25);
}

TEST(ComputeWeights, HopfieldCancelsAtMeanActivity) {
  EXPECT_DOUBLE_EQ(rule_weight(Rule::HOPF, 0.25, 0.25, 0.0625, 1, 0.25), 0.0);
}

TEST(ComputeWeights, BcpnnAfterOnePattern) {
  const auto layout = Layout::modular(2, 2);
  SynapticState s(4);
  train_pattern(s, from_bits(layout, {1, 0, 1, 0}));
  const auto ws = compute_weights(s, Rule::BCPNN, layout);
  EXPECT_DOUBLE_EQ(ws.w(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(ws.b[2], 0.0);
  // unit 3 was never active, so its pairs carry no evidence
  EXPECT_EQ(ws.w(0, 3), 0.0);
  EXPECT_EQ(ws.w(3, 0), 0.0);
  EXPECT_EQ(ws.w(1, 3), 0.0);
  EXPECT_NEAR(ws.b[3], std::log(0.5), 1e-15);
  // the log ratio itself for one active and one silent unit: (1/4) / (1 * 1/2)
  EXPECT_NEAR(rule_weight(Rule::BCPNN, 1.0, 0.5, 0.25, 0, 0.0), -std::log(2.0), 1e-15);
}

TEST(ComputeWeights, WillshawThresholdsCoincidences) {
  EXPECT_EQ(rule_weight(Rule::WILL, 0, 0, 0, 0, 0), 0.0);
  EXPECT_EQ(rule_weight(Rule::WILL, 0, 0, 0, 5, 0), 1.0);
}

TEST(ComputeWeights, PresynapticCovarianceNormalisesByPresynapticProbability) {
  EXPECT_DOUBLE_EQ(rule_weight(Rule::PRCOV, 0.5, 0.25, 0.25, 1, 0), (0.25 - 0.125) / 0.5);
}

TEST(ComputeWeights, PresynapticCovarianceIgnoresUnusedPresynapticUnits) {
  const auto layout = Layout::modular(2, 2);
  SynapticState s(4);
  train_pattern(s, from_bits(layout, {1, 0, 1, 0}));
  const auto ws = compute_weights(s, Rule::PRCOV, layout);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(ws.w(1, j), 0.0);
    EXPECT_EQ(weight_at(s, Rule::PRCOV, layout, 3, j), 0.0);
  }
  EXPECT_LT(ws.w(0, 1), 0.0);
}

TEST(ComputeWeights, ZeroDiagonalSwitch) {
  const auto layout = Layout::modular(2, 2);
  SynapticState s(4);
  train_pattern(s, from_bits(layout, {1, 0, 1, 0}));
  const auto ws = compute_weights(s, Rule::HEBB, layout, true);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(ws.w(i, i), 0.0);
  EXPECT_EQ(compute_weights(s, Rule::HEBB, layout).w(0, 0), 1.0);
}

// Properties over random training sets.
class WeightProperties : public ::testing::TestWithParam<Rule> {};

TEST_P(WeightProperties, SymmetryFinitenessAndBias) {
  const Rule rule = GetParam();
  const auto layout = Layout::modular(4, 4);
  for (std::uint64_t trial = 0; trial < 25; ++trial) {
    Rng rng(RngStream{2, trial});
    SynapticState s(16);
    for (int k = 0; k < 20; ++k) train_pattern(s, generate_hrand(layout, rng));
    const auto ws = compute_weights(s, rule, layout);
    for (std::size_t i = 0; i < 16; ++i) {
      if (rule != Rule::BCPNN) {
        EXPECT_EQ(ws.b[i], 0.0);
      }
      for (std::size_t j = 0; j < 16; ++j) {
        ASSERT_TRUE(std::isfinite(ws.w(i, j)));
        if (rule != Rule::PRCOV) {
          EXPECT_EQ(ws.w(i, j), ws.w(j, i));
        }
        if (rule == Rule::WILL) {
          EXPECT_TRUE(ws.w(i, j) == 0.0 || ws.w(i, j) == 1.0);
        }
      }
    }
  }
}

TEST_P(WeightProperties, FiniteOnDegenerateTrainingSets) {
  const Rule rule = GetParam();
  const auto layout = Layout::modular(3, 3);
  Rng rng(RngStream{3, 0});
  const auto p = generate_hrand(layout, rng);
  SynapticState s(9);
  for (int k = 0; k < 10; ++k) {
    train_pattern(s, p);  // c = 1 on the first pass, then all-identical sets
    const auto ws = compute_weights(s, rule, layout);
    for (double w : ws.w.data) ASSERT_TRUE(std::isfinite(w));
    for (double b : ws.b) ASSERT_TRUE(std::isfinite(b));
  }
}

INSTANTIATE_TEST_SUITE_P(AllRules, WeightProperties, ::testing::ValuesIn(kAllRules),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(WeightProperties, BcpnnSignFollowsCorrelation) {
  const auto layout = Layout::modular(4, 4);
  Rng rng(RngStream{4, 0});
  SynapticState s(16);
  for (int k = 0; k < 30; ++k) train_pattern(s, generate_hrand(layout, rng));
  const auto pe = p_estimates(s, Rule::BCPNN);
  const auto ws = compute_weights(s, Rule::BCPNN, layout);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) {
      const double prod = pe.p_i[i] * pe.p_i[j];
      if (std::abs(pe.p_ij(i, j) - prod) < 1e-12) continue;
      EXPECT_EQ(ws.w(i, j) > 0.0, pe.p_ij(i, j) > prod);
    }
}

TEST(WeightAt, MatchesFullMatrix) {
  const auto layout = Layout::modular(4, 4);
  Rng rng(RngStream{5, 0});
  SynapticState s(16);
  for (int k = 0; k < 12; ++k) train_pattern(s, generate_hrand(layout, rng));
  for (auto rule : kAllRules) {
    const auto ws = compute_weights(s, rule, layout);
    for (std::size_t i = 0; i < 16; i += 3)
      for (std::size_t j = 0; j < 16; j += 5) EXPECT_EQ(weight_at(s, rule, layout, i, j), ws.w(i, j));
  }
}

TEST(StateDump, RoundTripAndLayout) {
  const auto layout = Layout::modular(3, 3);
  Rng rng(RngStream{6, 0});
  SynapticState s(9);
  for (int k = 0; k < 7; ++k) train_pattern(s, generate_hrand(layout, rng));
  std::stringstream buf;
  save_state(buf, s);
  const std::string bytes = buf.str();
  ASSERT_EQ(bytes.size(), 4 + 4 + 4 + 8 + 4 * 9 + 4 * 81);
  EXPECT_EQ(bytes.substr(0, 4), "NAMS");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);   // version, little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 9);   // N
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 7);  // c
  std::stringstream in(bytes);
  EXPECT_EQ(load_state(in), s);

  std::stringstream bad("NOPE");
  EXPECT_THROW(load_state(bad), std::runtime_error);
  std::stringstream cut(bytes.substr(0, 30));
  EXPECT_THROW(load_state(cut), std::runtime_error);
}

TEST(RuleNames, ParseIsCaseInsensitive) {
  EXPECT_EQ(parse_rule("bcpnn"), Rule::BCPNN);
  EXPECT_EQ(parse_rule("PrCov"), Rule::PRCOV);
  EXPECT_THROW(parse_rule("storkey"), std::invalid_argument);
}

}  // namespace
}  // namespace hebbmem
