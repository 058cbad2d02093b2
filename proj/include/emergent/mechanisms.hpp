#pragma once

// Baseline mechanisms: Random Serial Dictatorship, Probabilistic Serial
// (simultaneous eating) and Rank-Minimization (min-cost assignment).

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include <boost/rational.hpp>

#include "emergent/core.hpp"
#include "emergent/random.hpp"

namespace emergent {

/// Largest n for which n! priority orders (or matchings) are enumerated.
inline constexpr std::size_t kMaxEnumerationN = 8;

inline std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t k = 2; k <= n; ++k) f *= k;
  return f;
}

namespace detail {

// Each agent in `order` takes its best available item.
inline std::vector<Item> serial_dictatorship(const PreferenceProfile& profile,
                                             std::span<const Agent> order) {
  const std::size_t n = profile.n();
  std::vector<Item> assignment(n);
  std::vector<bool> taken(n, false);
  for (Agent a : order) {
    for (Item i : profile.row(a)) {
      if (!taken[i]) {
        taken[i] = true;
        assignment[a] = i;
        break;
      }
    }
  }
  return assignment;
}

}  // namespace detail

inline Matching rsd_draw(const PreferenceProfile& profile, std::uint64_t seed) {
  Rng rng(seed);
  const auto order = rng.permutation(profile.n());
  return Matching::from_assignment(profile, detail::serial_dictatorship(profile, order));
}

/// Exact RSD lottery: the fraction of all n! priority orders giving a the item i.
inline FractionalAllocation rsd_allocation(const PreferenceProfile& profile) {
  const std::size_t n = profile.n();
  if (n > kMaxEnumerationN) {
    throw CapabilityError("rsd_allocation enumerates n! orders and supports n <= " +
                          std::to_string(kMaxEnumerationN) + "; use rsd_draw sampling instead");
  }
  std::vector<std::uint64_t> counts(n * n, 0);
  std::vector<Agent> order(n);
  std::iota(order.begin(), order.end(), Agent{0});
  do {
    const auto assignment = detail::serial_dictatorship(profile, order);
    for (Agent a = 0; a < n; ++a) ++counts[a * n + assignment[a]];
  } while (std::next_permutation(order.begin(), order.end()));
  const auto total = static_cast<double>(factorial(n));
  FractionalAllocation f(n);
  for (Agent a = 0; a < n; ++a)
    for (Item i = 0; i < n; ++i) f.at(a, i) = static_cast<double>(counts[a * n + i]) / total;
  return f;
}

using Rational = boost::rational<std::int64_t>;

/// n x n row-major matrix of exact shares.
struct RationalAllocation {
  std::size_t n = 0;
  std::vector<Rational> probs;

  Rational at(Agent a, Item i) const { return probs[a * n + i]; }

  FractionalAllocation to_fractional() const {
    FractionalAllocation f(n);
    for (Agent a = 0; a < n; ++a)
      for (Item i = 0; i < n; ++i) f.at(a, i) = boost::rational_cast<double>(at(a, i));
    return f;
  }
};

/// Simultaneous eating in exact rational time. Each interval every agent eats
/// its best item with stock left, at unit rate, until the next item runs out;
/// items exhausted at the same instant are all removed before re-targeting.
/// Denominators stay within int64 for n <= kMaxEnumerationN.
inline RationalAllocation probabilistic_serial_exact(const PreferenceProfile& profile) {
  const std::size_t n = profile.n();
  RationalAllocation out{n, std::vector<Rational>(n * n, Rational(0))};
  std::vector<Rational> stock(n, Rational(1));
  std::vector<std::size_t> cursor(n, 0);  // position in each agent's list
  std::vector<Item> target(n);
  std::vector<std::int64_t> eaters(n);
  Rational clock(0);
  while (clock < Rational(1)) {
    std::fill(eaters.begin(), eaters.end(), 0);
    for (Agent a = 0; a < n; ++a) {
      while (stock[profile.item_at(a, cursor[a])] == Rational(0)) ++cursor[a];
      target[a] = profile.item_at(a, cursor[a]);
      ++eaters[target[a]];
    }
    Rational step = Rational(1) - clock;
    for (Item i = 0; i < n; ++i)
      if (eaters[i] > 0) step = std::min(step, stock[i] / eaters[i]);
    for (Agent a = 0; a < n; ++a) out.probs[a * n + target[a]] += step;
    for (Item i = 0; i < n; ++i)
      if (eaters[i] > 0) stock[i] -= step * eaters[i];
    clock += step;
  }
  return out;
}

inline FractionalAllocation probabilistic_serial(const PreferenceProfile& profile) {
  return probabilistic_serial_exact(profile).to_fractional();
}

/// Minimum-cost perfect assignment (shortest augmenting paths with
/// potentials). Rows are inserted in ascending order and the first column
/// attaining a minimum wins, so ties resolve deterministically.
inline std::vector<std::size_t> hungarian_assignment(const std::vector<std::int64_t>& cost,
                                                     std::size_t n) {
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
  std::vector<std::size_t> match_of_col(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (std::size_t row = 1; row <= n; ++row) {
    match_of_col[0] = row;
    std::size_t col0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[col0] = true;
      const std::size_t row0 = match_of_col[col0];
      std::int64_t delta = kInf;
      std::size_t col1 = 0;
      for (std::size_t col = 1; col <= n; ++col) {
        if (used[col]) continue;
        const std::int64_t cur = cost[(row0 - 1) * n + (col - 1)] - u[row0] - v[col];
        if (cur < minv[col]) {
          minv[col] = cur;
          way[col] = col0;
        }
        if (minv[col] < delta) {
          delta = minv[col];
          col1 = col;
        }
      }
      for (std::size_t col = 0; col <= n; ++col) {
        if (used[col]) {
          u[match_of_col[col]] += delta;
          v[col] -= delta;
        } else {
          minv[col] -= delta;
        }
      }
      col0 = col1;
    } while (match_of_col[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match_of_col[col0] = match_of_col[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t col = 1; col <= n; ++col) assignment[match_of_col[col] - 1] = col - 1;
  return assignment;
}

/// A matching of minimum total rank; cost[a][i] = rank of i for a.
inline Matching rank_minimize(const PreferenceProfile& profile) {
  const std::size_t n = profile.n();
  std::vector<std::int64_t> cost(n * n);
  for (Agent a = 0; a < n; ++a)
    for (Item i = 0; i < n; ++i) cost[a * n + i] = profile.rank(a, i);
  return Matching::from_assignment(profile, hungarian_assignment(cost, n));
}

/// What a single mechanism call produced, with per-agent expected ranks.
struct MechanismOutcome {
  std::variant<Matching, FractionalAllocation> value;
  std::vector<double> expected_rank_per_agent;
  bool exact = true;

  static MechanismOutcome of(const Matching& m) {
    MechanismOutcome o{m, {}, true};
    for (Rank r : m.ranks) o.expected_rank_per_agent.push_back(r);
    return o;
  }

  static MechanismOutcome of(const PreferenceProfile& profile, FractionalAllocation f,
                             bool exact = true) {
    MechanismOutcome o{FractionalAllocation{}, {}, exact};
    for (Agent a = 0; a < profile.n(); ++a)
      o.expected_rank_per_agent.push_back(expected_rank(profile, f, a));
    o.value = std::move(f);
    return o;
  }
};

/// Common face of every mechanism evaluated by the metrics and oracle code.
class Mechanism {
 public:
  virtual ~Mechanism() = default;
  virtual std::string name() const = 0;

  /// True when exact_allocation is available for markets of size n.
  virtual bool has_exact_allocation(std::size_t n) const = 0;
  virtual FractionalAllocation exact_allocation(const PreferenceProfile& profile) const = 0;

  virtual bool can_draw() const { return true; }
  virtual Matching draw(const PreferenceProfile& profile, std::uint64_t seed) const = 0;
};

class RsdMechanism final : public Mechanism {
 public:
  std::string name() const override { return "RSD"; }
  bool has_exact_allocation(std::size_t n) const override { return n <= kMaxEnumerationN; }
  FractionalAllocation exact_allocation(const PreferenceProfile& p) const override {
    return rsd_allocation(p);
  }
  Matching draw(const PreferenceProfile& p, std::uint64_t seed) const override {
    return rsd_draw(p, seed);
  }
};

/// Evaluated in expectation only; no lottery decomposition is performed.
class PsMechanism final : public Mechanism {
 public:
  std::string name() const override { return "PS"; }
  bool has_exact_allocation(std::size_t) const override { return true; }
  FractionalAllocation exact_allocation(const PreferenceProfile& p) const override {
    return probabilistic_serial(p);
  }
  bool can_draw() const override { return false; }
  Matching draw(const PreferenceProfile&, std::uint64_t) const override {
    throw CapabilityError("PS is a fractional mechanism; it has no discrete draw");
  }
};

class RmMechanism final : public Mechanism {
 public:
  std::string name() const override { return "RM"; }
  bool has_exact_allocation(std::size_t) const override { return true; }
  FractionalAllocation exact_allocation(const PreferenceProfile& p) const override {
    return FractionalAllocation::from_matching(rank_minimize(p));
  }
  Matching draw(const PreferenceProfile& p, std::uint64_t) const override {
    return rank_minimize(p);
  }
};

}  // namespace emergent
