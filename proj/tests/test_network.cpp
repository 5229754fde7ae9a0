#include <gtest/gtest.h>

#include "hebbmem/network.hpp"

namespace hebbmem {
namespace {

WeightState make_weights(std::size_t n, std::vector<double> w, std::vector<double> b = {}) {
  WeightState ws;
  ws.w = Matrix<double>(n);
  ws.w.data = std::move(w);
  ws.b = b.empty() ? std::vector<double>(n, 0.0) : std::move(b);
  return ws;
}

WeightState trained(const Layout& layout, Rule rule, std::span<const Pattern> ps) {
  return compute_weights(train(ps, layout.N()), rule, layout);
}

TEST(Field, RowsArePresynaptic) {
  const auto ws = make_weights(2, {0, 2, 3, 0});
  Pattern a(Layout::non_modular(1, 2));
  a.bits = {1, 1};
  EXPECT_EQ(field(ws, a), (std::vector<double>{3, 2}));
  a.bits = {1, 0};
  EXPECT_EQ(field(ws, a), (std::vector<double>{0, 2}));
}

TEST(Field, AddsBias) {
  const auto ws = make_weights(2, {0, 0, 0, 0}, {0.5, -1});
  Pattern a(Layout::non_modular(1, 2));
  EXPECT_EQ(field(ws, a), (std::vector<double>{0.5, -1}));
}

TEST(Activate, ModularPicksBlockMaxima) {
  const auto layout = Layout::modular(2, 3);
  const std::vector<double> h{0.1, 0.9, 0.3, 2.0, -1.0, 1.5};
  const auto p = activate_modular(h, layout);
  EXPECT_EQ(p.bits, (std::vector<std::uint8_t>{0, 1, 0, 1, 0, 0}));
}

TEST(Activate, ModularTiesGoToLowestIndex) {
  const auto layout = Layout::modular(2, 3);
  const std::vector<double> h{1, 1, 1, 0, 5, 5};
  EXPECT_EQ(activate_modular(h, layout).bits, (std::vector<std::uint8_t>{1, 0, 0, 0, 1, 0}));
}

TEST(Activate, KwtaPicksLargest) {
  const auto layout = Layout::non_modular(2, 2);
  const std::vector<double> h{3, 1, 2, 0};
  EXPECT_EQ(activate_kwta(h, layout).bits, (std::vector<std::uint8_t>{1, 0, 1, 0}));
}

TEST(Activate, KwtaBoundaryTieGoesToLowestIndex) {
  const auto layout = Layout::non_modular(2, 2);
  const std::vector<double> h{0, 1, 1, 1};
  EXPECT_EQ(activate_kwta(h, layout).bits, (std::vector<std::uint8_t>{0, 1, 1, 0}));
}

TEST(Activate, SizeMismatchThrows) {
  const std::vector<double> h{1, 2, 3};
  EXPECT_THROW(activate_modular(h, Layout::modular(2, 2)), std::invalid_argument);
  EXPECT_THROW(activate_kwta(h, Layout::non_modular(2, 2)), std::invalid_argument);
}

TEST(Activate, CardinalityAndRankInvariance) {
  for (std::uint64_t t = 0; t < 200; ++t) {
    Rng rng(RngStream{10, t});
    const auto mod = Layout::modular(4, 5);
    const auto non = Layout::non_modular(4, 5);
    std::vector<double> h(20);
    for (auto& x : h) x = static_cast<double>(rng.below(7)) - 3.0;  // plenty of ties
    std::vector<double> g(h);
    for (auto& x : g) x = 3.0 * x * x * x + 11.0;  // strictly increasing map

    const auto pm = activate_modular(h, mod);
    ASSERT_TRUE(pm.one_per_block());
    ASSERT_EQ(pm, activate_modular(g, mod));

    const auto pk = activate_kwta(h, non);
    ASSERT_EQ(pk.active_count(), 4u);
    ASSERT_EQ(pk, activate_kwta(g, non));
    // every winner's field is at least every loser's
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t j = 0; j < 20; ++j)
        if (pk.bits[i] && !pk.bits[j]) {
          ASSERT_GE(h[i], h[j]);
        }
  }
}

TEST(Recall, ZeroWeightsSettleOnFirstUnits) {
  const auto layout = Layout::modular(3, 4);
  const auto ws = make_weights(12, std::vector<double>(144, 0.0));
  Rng rng(RngStream{11, 0});
  for (auto order : {UpdateOrder::sequential, UpdateOrder::synchronous}) {
    const auto res = recall(ws, generate_hrand(layout, rng), {layout, Rule::HEBB, 10, false, order});
    EXPECT_EQ(res.final_state.active_units(), (std::vector<std::uint32_t>{0, 4, 8}));
    EXPECT_TRUE(res.converged);
  }
}

class SinglePattern : public ::testing::TestWithParam<Rule> {};

TEST_P(SinglePattern, IsAFixedPoint) {
  for (std::uint64_t t = 0; t < 5; ++t) {
    Rng rng(RngStream{12, t});
    const auto mod = Layout::modular(8, 8);
    const auto non = Layout::non_modular(8, 8);
    const std::vector<Pattern> pm{generate_hrand(mod, rng)};
    const std::vector<Pattern> pn{generate_nrand(non, rng)};
    for (auto order : {UpdateOrder::sequential, UpdateOrder::synchronous}) {
      const auto res = recall(trained(mod, GetParam(), pm), pm[0], {mod, GetParam(), 10, false, order});
      EXPECT_EQ(res.final_state, pm[0]);
      EXPECT_LE(res.iterations_used, 2);
    }
    const auto res = recall(trained(non, GetParam(), pn), pn[0], {non, GetParam()});
    EXPECT_EQ(res.final_state, pn[0]);
    EXPECT_LE(res.iterations_used, 2);
  }
}

INSTANTIATE_TEST_SUITE_P(AllRules, SinglePattern, ::testing::ValuesIn(kAllRules),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Recall, BcpnnCompletesLightlyLoadedNetwork) {
  const auto layout = Layout::modular(16, 16);
  Rng rng(RngStream{13, 0});
  std::vector<Pattern> ps;
  for (int k = 0; k < 50; ++k) ps.push_back(generate_hrand(layout, rng));
  const auto ws = trained(layout, Rule::BCPNN, ps);
  const PatternSpec spec{PatternKind::hrand};
  int hits = 0;
  for (const auto& p : ps)
    hits += recall(ws, distort(p, 2.0, rng, spec), {layout, Rule::BCPNN}).final_state == p;
  EXPECT_GE(hits, 48);
}

TEST(Recall, IterationCapAndDeterminism) {
  const auto layout = Layout::non_modular(6, 6);
  Rng rng(RngStream{14, 0});
  std::vector<Pattern> ps;
  for (int k = 0; k < 40; ++k) ps.push_back(generate_nrand(layout, rng));
  for (auto rule : kAllRules) {
    const auto ws = trained(layout, rule, ps);
    for (int cap : {1, 3, 10}) {
      const NetworkConfig cfg{layout, rule, cap};
      for (int k = 0; k < 10; ++k) {
        const auto cue = generate_nrand(layout, rng);
        const auto a = recall(ws, cue, cfg);
        const auto b = recall(ws, cue, cfg);
        ASSERT_EQ(a.final_state, b.final_state);
        ASSERT_EQ(a.iterations_used, b.iterations_used);
        ASSERT_LE(a.iterations_used, cap);
        ASSERT_EQ(a.final_state.active_count(), 6u);
        if (a.converged) {
          ASSERT_EQ(update(ws, a.final_state, layout), a.final_state);
        }
      }
    }
  }
}

TEST(Recall, ConvergedModularStateIsFixedUnderBothOrders) {
  const auto layout = Layout::modular(8, 8);
  Rng rng(RngStream{15, 0});
  std::vector<Pattern> ps;
  for (int k = 0; k < 60; ++k) ps.push_back(generate_hrand(layout, rng));
  for (auto rule : kAllRules) {
    const auto ws = trained(layout, rule, ps);
    for (int k = 0; k < 10; ++k) {
      const auto res = recall(ws, generate_hrand(layout, rng), {layout, rule});
      ASSERT_TRUE(res.final_state.one_per_block());
      if (res.converged) {
        ASSERT_EQ(update(ws, res.final_state, layout), res.final_state);
      }
    }
  }
}

TEST(Recall, RejectsBadInput) {
  const auto layout = Layout::modular(2, 2);
  const auto ws = make_weights(4, std::vector<double>(16, 0.0));
  Pattern cue(layout);
  EXPECT_THROW(recall(ws, cue, {layout, Rule::HEBB}), std::invalid_argument);  // no active units
  cue.bits = {1, 0, 0, 1};
  EXPECT_THROW(recall(ws, cue, {layout, Rule::HEBB, 0}), std::invalid_argument);
  EXPECT_THROW(recall(ws, Pattern(Layout::modular(3, 3)), {layout, Rule::HEBB}), std::invalid_argument);
}

}  // namespace
}  // namespace hebbmem
