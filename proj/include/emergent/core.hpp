#pragma once

// Domain types for one-sided matching markets: n agents, n items, strict
// complete rankings. Agent and item indices are 0-based; ranks are 1-based.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "emergent/error.hpp"

namespace emergent {

using Agent = std::size_t;
using Item = std::size_t;
using Rank = int;

/// True if `values` holds each of 0..values.size()-1 exactly once.
template <class Int>
bool is_permutation_of_indices(std::span<const Int> values) {
  std::vector<bool> seen(values.size(), false);
  for (Int v : values) {
    if constexpr (std::is_signed_v<Int>) {
      if (v < 0) return false;
    }
    auto k = static_cast<std::size_t>(v);
    if (k >= values.size() || seen[k]) return false;
    seen[k] = true;
  }
  return true;
}

/// A market: row a lists agent a's items from most to least preferred.
class PreferenceProfile {
 public:
  PreferenceProfile() = default;

  explicit PreferenceProfile(const std::vector<std::vector<Item>>& prefs) {
    n_ = prefs.size();
    if (n_ == 0) throw InputError("preference profile needs at least one agent");
    prefs_.resize(n_ * n_);
    ranks_.resize(n_ * n_);
    for (Agent a = 0; a < n_; ++a) {
      if (prefs[a].size() != n_) {
        throw InputError("preference row " + std::to_string(a) + " has length " +
                         std::to_string(prefs[a].size()) + ", expected " + std::to_string(n_));
      }
      if (!is_permutation_of_indices(std::span<const Item>(prefs[a]))) {
        throw InputError("preference row " + std::to_string(a) + " is not a permutation");
      }
      for (std::size_t k = 0; k < n_; ++k) {
        prefs_[a * n_ + k] = prefs[a][k];
        ranks_[a * n_ + prefs[a][k]] = static_cast<Rank>(k + 1);
      }
    }
  }

  std::size_t n() const { return n_; }

  std::span<const Item> row(Agent a) const { return {prefs_.data() + a * n_, n_}; }

  Item item_at(Agent a, std::size_t position) const { return prefs_[a * n_ + position]; }

  /// Unchecked rank lookup; see rank_of for the checked variant.
  Rank rank(Agent a, Item i) const { return ranks_[a * n_ + i]; }

  std::vector<std::vector<Item>> rows() const {
    std::vector<std::vector<Item>> out(n_);
    for (Agent a = 0; a < n_; ++a) out[a].assign(row(a).begin(), row(a).end());
    return out;
  }

  /// Same market with agent a's report replaced.
  PreferenceProfile with_report(Agent a, std::span<const Item> report) const {
    auto r = rows();
    r.at(a).assign(report.begin(), report.end());
    return PreferenceProfile(r);
  }

  friend bool operator==(const PreferenceProfile& x, const PreferenceProfile& y) {
    return x.n_ == y.n_ && x.prefs_ == y.prefs_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Item> prefs_;
  std::vector<Rank> ranks_;
};

inline Rank rank_of(const PreferenceProfile& profile, Agent agent, Item item) {
  if (agent >= profile.n() || item >= profile.n()) {
    throw InputError("rank_of: agent " + std::to_string(agent) + " / item " + std::to_string(item) +
                     " out of range for n=" + std::to_string(profile.n()));
  }
  return profile.rank(agent, item);
}

/// A perfect one-to-one assignment with the ranks it gives each agent.
struct Matching {
  std::vector<Item> assignment;
  std::vector<Rank> ranks;

  static Matching from_assignment(const PreferenceProfile& profile, std::vector<Item> assignment) {
    if (assignment.size() != profile.n() ||
        !is_permutation_of_indices(std::span<const Item>(assignment))) {
      throw InputError("assignment is not a perfect matching");
    }
    Matching m;
    m.ranks.reserve(assignment.size());
    for (Agent a = 0; a < assignment.size(); ++a) m.ranks.push_back(profile.rank(a, assignment[a]));
    m.assignment = std::move(assignment);
    return m;
  }

  std::size_t n() const { return assignment.size(); }

  int total_rank() const {
    int s = 0;
    for (Rank r : ranks) s += r;
    return s;
  }

  friend bool operator==(const Matching&, const Matching&) = default;
};

inline double average_rank(const Matching& m) {
  return static_cast<double>(m.total_rank()) / static_cast<double>(m.n());
}

/// Doubly stochastic n x n matrix; at(a, i) is the probability agent a receives item i.
class FractionalAllocation {
 public:
  FractionalAllocation() = default;
  explicit FractionalAllocation(std::size_t n) : n_(n), probs_(n * n, 0.0) {}

  static FractionalAllocation from_matching(const Matching& m) {
    FractionalAllocation f(m.n());
    for (Agent a = 0; a < m.n(); ++a) f.at(a, m.assignment[a]) = 1.0;
    return f;
  }

  std::size_t n() const { return n_; }
  double& at(Agent a, Item i) { return probs_[a * n_ + i]; }
  double at(Agent a, Item i) const { return probs_[a * n_ + i]; }
  std::span<const double> row(Agent a) const { return {probs_.data() + a * n_, n_}; }

  bool is_doubly_stochastic(double tol = 1e-9) const {
    for (std::size_t k = 0; k < n_; ++k) {
      double rs = 0.0, cs = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        const double v = probs_[k * n_ + j];
        if (v < -tol || v > 1.0 + tol) return false;
        rs += v;
        cs += probs_[j * n_ + k];
      }
      if (std::abs(rs - 1.0) > tol || std::abs(cs - 1.0) > tol) return false;
    }
    return true;
  }

  double max_abs_diff(const FractionalAllocation& other) const {
    double d = 0.0;
    for (std::size_t k = 0; k < probs_.size(); ++k) d = std::max(d, std::abs(probs_[k] - other.probs_[k]));
    return d;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> probs_;
};

inline double expected_rank(const PreferenceProfile& profile, const FractionalAllocation& alloc,
                            Agent a) {
  double s = 0.0;
  for (Item i = 0; i < profile.n(); ++i) s += alloc.at(a, i) * profile.rank(a, i);
  return s;
}

inline double expected_average_rank(const PreferenceProfile& profile,
                                    const FractionalAllocation& alloc) {
  double s = 0.0;
  for (Agent a = 0; a < profile.n(); ++a) s += expected_rank(profile, alloc, a);
  return s / static_cast<double>(profile.n());
}

enum class UtilityKind { Borda };

/// Cardinal utilities derived from ranks. Borda: u = n - r + 1, so u >= 1
/// and u strictly decreases with rank.
struct UtilityModel {
  UtilityKind kind = UtilityKind::Borda;

  double from_rank(Rank r, std::size_t n) const {
    switch (kind) {
      case UtilityKind::Borda:
        return static_cast<double>(static_cast<int>(n) - r + 1);
    }
    return 0.0;
  }
};

inline double utility_of(const UtilityModel& model, const PreferenceProfile& profile, Agent agent,
                         Item item) {
  return model.from_rank(rank_of(profile, agent, item), profile.n());
}

/// Expected utility of agent a under `alloc`, judged by the agent's true ranks in `truth`.
inline double expected_utility(const UtilityModel& model, const PreferenceProfile& truth,
                               const FractionalAllocation& alloc, Agent a) {
  double s = 0.0;
  for (Item i = 0; i < truth.n(); ++i) {
    const double p = alloc.at(a, i);
    if (p != 0.0) s += p * model.from_rank(truth.rank(a, i), truth.n());
  }
  return s;
}

}  // namespace emergent
