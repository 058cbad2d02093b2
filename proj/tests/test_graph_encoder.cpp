#include <gtest/gtest.h>

#include "emergent/gflownet/graph_encoder.hpp"
#include "emergent/profilegen.hpp"

using namespace emergent;
using namespace emergent::gfn;

namespace {

struct Relabeled {
  PreferenceProfile profile;
  MatchState state;
};

// Agent a becomes agent_map[a]; item i becomes item_map[i]. The same
// actions are replayed in the relabeled market.
Relabeled relabel(const PreferenceProfile& p, const std::vector<Action>& actions,
                  const std::vector<std::size_t>& agent_map, const std::vector<std::size_t>& item_map) {
  const std::size_t n = p.n();
  std::vector<std::vector<Item>> rows(n);
  for (Agent a = 0; a < n; ++a) {
    for (Item i : p.row(a)) rows[agent_map[a]].push_back(item_map[i]);
  }
  Relabeled r{PreferenceProfile(rows), MatchState(n)};
  for (const auto& act : actions) r.state = r.state.apply(agent_map[act.agent], item_map[act.item]);
  return r;
}

}  // namespace

TEST(GraphPolicy, ParameterCountIsSizeIndependent) {
  GraphPolicy model({16, 3});
  model.initialize(1);
  const std::size_t count = model.parameter_count();
  for (std::size_t n = 1; n <= 7; ++n) {
    const auto p = generate(n, 1, n).profiles[0];
    const auto out = model.forward(p, initial_state(p), nullptr);
    EXPECT_EQ(out.logits.size(), n * n);
    EXPECT_TRUE(std::isfinite(out.log_flow));
    EXPECT_EQ(model.parameter_count(), count);
  }
}

TEST(GraphPolicy, DefaultShape) {
  const GraphPolicy model;
  EXPECT_EQ(model.config().hidden, 256u);
  EXPECT_EQ(model.config().layers, 5u);
  std::size_t total = 0;
  for (const auto& t : model.tensors()) {
    EXPECT_EQ(t.offset, total);
    total += t.size();
  }
  EXPECT_EQ(total, model.parameter_count());
  EXPECT_EQ(model.tensors().front().name, "embed.w");
  EXPECT_EQ(model.tensors().back().name, "flow.out.b");
}

TEST(GraphPolicy, InitializationIsSeeded) {
  GraphPolicy a({8, 2}), b({8, 2}), c({8, 2});
  a.initialize(5);
  b.initialize(5);
  c.initialize(6);
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
  EXPECT_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
  for (const auto& t : a.tensors()) {
    if (!t.name.ends_with(".b")) continue;
    for (std::size_t k = 0; k < t.size(); ++k) EXPECT_EQ(a.parameters()[t.offset + k], 0.0);
  }
}

TEST(GraphPolicy, EquivariantUnderAgentAndItemRelabeling) {
  GraphPolicy model({12, 3});
  model.initialize(7);
  Rng rng(11);
  for (std::size_t n = 2; n <= 5; ++n) {
    for (const auto& p : generate(n, 5, 100 + n).profiles) {
      std::vector<Action> actions;
      MatchState s = initial_state(p);
      const std::size_t depth = rng.index(n);
      for (std::size_t k = 0; k < depth; ++k) {
        const auto acts = feasible_actions(s);
        actions.push_back(acts[rng.index(acts.size())]);
        s = s.apply(actions.back().agent, actions.back().item);
      }
      const auto agent_map = rng.permutation(n);
      const auto item_map = rng.permutation(n);
      const auto moved = relabel(p, actions, agent_map, item_map);
      const auto before = model.forward(p, s, nullptr);
      const auto after = model.forward(moved.profile, moved.state, nullptr);
      EXPECT_NEAR(before.log_flow, after.log_flow, 1e-10);
      for (Agent a = 0; a < n; ++a) {
        for (Item i = 0; i < n; ++i) {
          const double x = before.prob(a * n + i);
          const double y = after.prob(agent_map[a] * n + item_map[i]);
          ASSERT_NEAR(x, y, 1e-12);
        }
      }
    }
  }
}

TEST(GraphPolicy, RanksChangeTheOutput) {
  GraphPolicy model({8, 2});
  model.initialize(2);
  const PreferenceProfile p({{0, 1, 2}, {1, 2, 0}, {2, 0, 1}});
  const PreferenceProfile q({{2, 1, 0}, {1, 2, 0}, {2, 0, 1}});
  const auto a = model.forward(p, initial_state(p), nullptr);
  const auto b = model.forward(q, initial_state(q), nullptr);
  EXPECT_NE(a.log_probs, b.log_probs);
}

TEST(GraphPolicy, RejectsZeroWidth) { EXPECT_THROW(GraphPolicy({0, 2}), ConfigError); }
