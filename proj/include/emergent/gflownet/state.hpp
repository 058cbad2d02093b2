#pragma once

// The matching MDP. A state is an n x n grid over {excluded, included,
// undecided}; an action includes one undecided (agent, item) cell and closes
// the rest of its row and column. Terminal states are perfect matchings.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "emergent/core.hpp"

namespace emergent::gfn {

enum class Cell : std::uint8_t { Excluded = 0, Included = 1, Undecided = 2 };

struct Action {
  Agent agent = 0;
  Item item = 0;
  friend bool operator==(const Action&, const Action&) = default;
};

class MatchState {
 public:
  MatchState() = default;

  /// All cells undecided.
  explicit MatchState(std::size_t n) : n_(n), cells_(n * n, Cell::Undecided) {}

  std::size_t n() const { return n_; }
  Cell at(Agent a, Item i) const { return cells_[a * n_ + i]; }
  Cell cell(std::size_t index) const { return cells_[index]; }
  std::span<const Cell> cells() const { return cells_; }

  std::size_t included_count() const { return included_; }
  bool is_terminal() const { return included_ == n_; }
  bool is_initial() const { return included_ == 0; }

  bool agent_matched(Agent a) const {
    for (Item i = 0; i < n_; ++i)
      if (at(a, i) == Cell::Included) return true;
    return false;
  }
  bool item_matched(Item i) const {
    for (Agent a = 0; a < n_; ++a)
      if (at(a, i) == Cell::Included) return true;
    return false;
  }

  /// Copy of this state with (agent, item) included.
  MatchState apply(Agent agent, Item item) const {
    if (agent >= n_ || item >= n_) throw IllegalActionError("action index out of range");
    if (at(agent, item) != Cell::Undecided) {
      throw IllegalActionError("cell (" + std::to_string(agent) + "," + std::to_string(item) +
                               ") is not undecided");
    }
    MatchState next = *this;
    for (std::size_t k = 0; k < n_; ++k) {
      if (next.cells_[agent * n_ + k] == Cell::Undecided) next.cells_[agent * n_ + k] = Cell::Excluded;
      if (next.cells_[k * n_ + item] == Cell::Undecided) next.cells_[k * n_ + item] = Cell::Excluded;
    }
    next.cells_[agent * n_ + item] = Cell::Included;
    ++next.included_;
    return next;
  }

  /// Cell codes in base 3, row-major. Unique per state for n <= 6.
  std::uint64_t code() const {
    std::uint64_t c = 0;
    for (Cell v : cells_) c = c * 3 + static_cast<std::uint64_t>(v);
    return c;
  }

  friend bool operator==(const MatchState& x, const MatchState& y) { return x.cells_ == y.cells_; }

 private:
  std::size_t n_ = 0;
  std::size_t included_ = 0;
  std::vector<Cell> cells_;
};

inline MatchState initial_state(const PreferenceProfile& profile) { return MatchState(profile.n()); }

inline MatchState apply_action(const MatchState& s, Agent agent, Item item) {
  return s.apply(agent, item);
}

inline std::vector<Action> feasible_actions(const MatchState& s) {
  std::vector<Action> out;
  for (Agent a = 0; a < s.n(); ++a)
    for (Item i = 0; i < s.n(); ++i)
      if (s.at(a, i) == Cell::Undecided) out.push_back({a, i});
  return out;
}

/// Sum of ranks over included cells.
inline int included_rank_sum(const MatchState& s, const PreferenceProfile& profile) {
  int sum = 0;
  for (Agent a = 0; a < s.n(); ++a)
    for (Item i = 0; i < s.n(); ++i)
      if (s.at(a, i) == Cell::Included) sum += profile.rank(a, i);
  return sum;
}

inline Matching to_matching(const MatchState& s, const PreferenceProfile& profile) {
  if (!s.is_terminal()) throw ContractError("to_matching: state is not terminal");
  std::vector<Item> assignment(s.n());
  for (Agent a = 0; a < s.n(); ++a)
    for (Item i = 0; i < s.n(); ++i)
      if (s.at(a, i) == Cell::Included) assignment[a] = i;
  return Matching::from_assignment(profile, std::move(assignment));
}

/// Terminal state whose included cells are the given assignment.
inline MatchState state_of(const Matching& m) {
  MatchState s(m.n());
  for (Agent a = 0; a < m.n(); ++a) s = s.apply(a, m.assignment[a]);
  return s;
}

/// Reward temperature; rewards are exp(-E/T) with E = ln(1 + total rank).
struct EnergySpec {
  double temperature = 1.0;

  void validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
      throw InputError("temperature must be a positive finite number");
    }
  }
};

/// Energy E(s) = ln(1 + sum of included ranks), before temperature scaling.
inline double energy(const MatchState& s, const PreferenceProfile& profile) {
  return std::log1p(static_cast<double>(included_rank_sum(s, profile)));
}

/// Scaled energy E~(s) = E(s) / T, defined on every state.
inline double partial_energy(const MatchState& s, const PreferenceProfile& profile,
                             const EnergySpec& spec) {
  return energy(s, profile) / spec.temperature;
}

inline double log_reward(const MatchState& x, const PreferenceProfile& profile,
                         const EnergySpec& spec) {
  if (!x.is_terminal()) throw ContractError("reward is only defined on terminal states");
  return -partial_energy(x, profile, spec);
}

/// (1 + total rank)^(-1/T); equals 1 / (1 + total rank) at T = 1.
inline double reward(const MatchState& x, const PreferenceProfile& profile, const EnergySpec& spec) {
  return std::exp(log_reward(x, profile, spec));
}

/// Fixed uniform backward policy over the included cells of s.
inline double backward_prob(const MatchState& s) {
  if (s.is_initial()) throw ContractError("the initial state has no predecessor");
  return 1.0 / static_cast<double>(s.included_count());
}

inline double log_backward_prob(const MatchState& s) { return std::log(backward_prob(s)); }

struct Trajectory {
  std::vector<MatchState> states;
  std::vector<Action> actions;

  std::size_t length() const { return actions.size(); }
  const MatchState& terminal() const { return states.back(); }
};

}  // namespace emergent::gfn
