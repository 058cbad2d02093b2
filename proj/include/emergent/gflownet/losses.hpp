#pragma once

// Per-transition training objectives.
//
// Forward-looking (FL), with E~ the temperature-scaled partial energy:
//   delta = -E~(s) + log F~(s) + log P_F(s'|s) + E~(s') - log F~(s') - log P_B(s|s')
// where log F~(x) := 0 on terminal x, since F(x) = R(x) = exp(-E~(x)).
//
// Detailed balance (DB):
//   delta = log F(s) + log P_F(s'|s) - log F(s') - log P_B(s|s')
// where log F(x) := log R(x) on terminal x.
//
// Both losses are delta^2. The network's flow head supplies log F~ under FL
// and log F under DB.

#include <algorithm>
#include <span>
#include <vector>

#include "emergent/gflownet/policy.hpp"

namespace emergent::gfn {

enum class Objective { ForwardLooking, DetailedBalance };

inline const char* objective_name(Objective o) {
  return o == Objective::ForwardLooking ? "fl" : "db";
}

struct Transition {
  const PreferenceProfile* profile = nullptr;
  MatchState from;
  Action action;
  MatchState to;
};

inline Transition make_transition(const PreferenceProfile& profile, const MatchState& from,
                                  Action action) {
  return {&profile, from, action, from.apply(action.agent, action.item)};
}

/// Squared residual of one transition. When `grads` is non-empty, adds
/// weight * d(loss)/d(params) to it.
template <PolicyNetwork M>
double transition_loss(const M& model, const Transition& t, const EnergySpec& spec,
                       Objective objective, std::span<double> grads = {}, double weight = 1.0) {
  const PreferenceProfile& profile = *t.profile;
  typename M::Tape tape_from, tape_to;
  const bool want_grad = !grads.empty();
  const PolicyOutput out_from = model.forward(profile, t.from, want_grad ? &tape_from : nullptr);
  const std::size_t chosen = t.action.agent * t.from.n() + t.action.item;

  double delta = out_from.log_flow + out_from.log_probs[chosen] - log_backward_prob(t.to);
  const bool terminal = t.to.is_terminal();
  PolicyOutput out_to;
  if (!terminal) out_to = model.forward(profile, t.to, want_grad ? &tape_to : nullptr);

  if (objective == Objective::ForwardLooking) {
    delta += partial_energy(t.to, profile, spec) - partial_energy(t.from, profile, spec);
    if (!terminal) delta -= out_to.log_flow;
  } else {
    delta -= terminal ? log_reward(t.to, profile, spec) : out_to.log_flow;
  }

  if (want_grad) {
    const double scale = 2.0 * delta * weight;
    std::vector<double> g_logits(out_from.logits.size(), 0.0);
    accumulate_log_prob_grad(out_from, chosen, scale, g_logits);
    model.backward(tape_from, g_logits, scale, grads);
    if (!terminal) {
      std::fill(g_logits.begin(), g_logits.end(), 0.0);
      model.backward(tape_to, g_logits, -scale, grads);
    }
  }
  return delta * delta;
}

template <PolicyNetwork M>
double fl_loss(const M& model, const Transition& t, const EnergySpec& spec,
               std::span<double> grads = {}) {
  return transition_loss(model, t, spec, Objective::ForwardLooking, grads);
}

template <PolicyNetwork M>
double db_loss(const M& model, const Transition& t, const EnergySpec& spec,
               std::span<double> grads = {}) {
  return transition_loss(model, t, spec, Objective::DetailedBalance, grads);
}

/// Every transition of the profile's MDP, in breadth-first order.
inline std::vector<Transition> all_transitions(const PreferenceProfile& profile) {
  std::vector<Transition> out;
  std::vector<MatchState> frontier{initial_state(profile)};
  while (!frontier.empty()) {
    std::vector<MatchState> next;
    std::vector<std::uint64_t> seen;
    for (const auto& s : frontier) {
      for (const auto& act : feasible_actions(s)) {
        out.push_back(make_transition(profile, s, act));
        const auto code = out.back().to.code();
        if (!out.back().to.is_terminal() && std::find(seen.begin(), seen.end(), code) == seen.end()) {
          seen.push_back(code);
          next.push_back(out.back().to);
        }
      }
    }
    frontier = std::move(next);
  }
  return out;
}

/// Mean loss over every transition of the profile's MDP.
template <PolicyNetwork M>
double exhaustive_loss(const M& model, const PreferenceProfile& profile, const EnergySpec& spec,
                       Objective objective) {
  const auto transitions = all_transitions(profile);
  double sum = 0.0;
  for (const auto& t : transitions) sum += transition_loss(model, t, spec, objective);
  return sum / static_cast<double>(transitions.size());
}

}  // namespace emergent::gfn
