#pragma once

// Brute-force ground truth for small markets. Nothing here calls into the
// learned sampler, so it can serve as an independent check on it.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "emergent/core.hpp"
#include "emergent/mechanisms.hpp"

namespace emergent {

struct MatchingEnumeration {
  std::vector<Matching> matchings;  // lexicographic order of assignment vectors
  std::vector<int> total_ranks;

  int min_total_rank() const { return *std::min_element(total_ranks.begin(), total_ranks.end()); }
  int max_total_rank() const { return *std::max_element(total_ranks.begin(), total_ranks.end()); }
};

inline MatchingEnumeration enumerate_matchings(const PreferenceProfile& profile) {
  const std::size_t n = profile.n();
  if (n > kMaxEnumerationN) {
    throw CapabilityError("enumerate_matchings supports n <= " + std::to_string(kMaxEnumerationN));
  }
  MatchingEnumeration out;
  out.matchings.reserve(factorial(n));
  std::vector<Item> assignment(n);
  std::iota(assignment.begin(), assignment.end(), Item{0});
  do {
    out.matchings.push_back(Matching::from_assignment(profile, assignment));
    out.total_ranks.push_back(out.matchings.back().total_rank());
  } while (std::next_permutation(assignment.begin(), assignment.end()));
  return out;
}

/// Position of a permutation in lexicographic order (Lehmer code).
inline std::size_t lexicographic_index(std::span<const Item> perm) {
  const std::size_t n = perm.size();
  std::size_t index = 0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t smaller = 0;
    for (std::size_t j = k + 1; j < n; ++j)
      if (perm[j] < perm[k]) ++smaller;
    index += smaller * static_cast<std::size_t>(factorial(n - 1 - k));
  }
  return index;
}

inline constexpr std::size_t kMaxExactDistributionN = 6;

/// p(x) proportional to (1 + total rank of x)^(-1/T), over all n! matchings
/// in lexicographic order.
inline std::vector<double> exact_terminal_distribution(const PreferenceProfile& profile,
                                                       double temperature) {
  if (!(temperature > 0.0)) throw InputError("temperature must be positive");
  if (profile.n() > kMaxExactDistributionN) {
    throw CapabilityError("exact_terminal_distribution supports n <= " +
                          std::to_string(kMaxExactDistributionN));
  }
  const auto all = enumerate_matchings(profile);
  std::vector<double> logw(all.total_ranks.size());
  for (std::size_t k = 0; k < logw.size(); ++k) {
    logw[k] = -std::log(1.0 + all.total_ranks[k]) / temperature;
  }
  const double hi = *std::max_element(logw.begin(), logw.end());
  double z = 0.0;
  for (double& w : logw) z += (w = std::exp(w - hi));
  for (double& w : logw) w /= z;
  return logw;
}

/// Marginal assignment probabilities of a distribution over matchings in lexicographic order.
inline FractionalAllocation allocation_of_distribution(std::size_t n, std::span<const double> dist) {
  FractionalAllocation f(n);
  std::vector<Item> assignment(n);
  std::iota(assignment.begin(), assignment.end(), Item{0});
  std::size_t k = 0;
  do {
    for (Agent a = 0; a < n; ++a) f.at(a, assignment[a]) += dist[k];
    ++k;
  } while (std::next_permutation(assignment.begin(), assignment.end()));
  return f;
}

inline double total_variation(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += std::abs(p[k] - q[k]);
  return 0.5 * s;
}

/// Relative gain below which a misreport counts as a tie with the truthful
/// report; absorbs rounding in floating-point allocations.
inline constexpr double kUtilityTieTolerance = 1e-12;

/// best / truthful, with ties (within tolerance) reported as exactly 1.
inline double incentive_ratio_from(double truthful, double best) {
  if (best <= truthful * (1.0 + kUtilityTieTolerance)) return 1.0;
  return best / truthful;
}

/// All n! rankings of n items, lexicographic.
inline std::vector<std::vector<Item>> all_rankings(std::size_t n) {
  std::vector<std::vector<Item>> out;
  std::vector<Item> r(n);
  std::iota(r.begin(), r.end(), Item{0});
  do out.push_back(r);
  while (std::next_permutation(r.begin(), r.end()));
  return out;
}

inline constexpr std::size_t kMaxExactIncentiveN = 4;

/// Per-agent incentive ratio with every possible report (truthful included),
/// using the mechanism's exact allocation throughout.
inline std::vector<double> exact_incentive_ratio(const Mechanism& mechanism,
                                                 const PreferenceProfile& profile,
                                                 const UtilityModel& model = {}) {
  const std::size_t n = profile.n();
  if (n > kMaxExactIncentiveN) {
    throw CapabilityError("exact_incentive_ratio enumerates all misreports only for n <= " +
                          std::to_string(kMaxExactIncentiveN) +
                          "; use sampled_incentive_ratio for larger markets");
  }
  if (!mechanism.has_exact_allocation(n)) {
    throw CapabilityError(mechanism.name() + " exposes no exact allocation at n=" + std::to_string(n));
  }
  const FractionalAllocation truthful = mechanism.exact_allocation(profile);
  const auto reports = all_rankings(n);
  std::vector<double> ratios(n, 1.0);
  for (Agent a = 0; a < n; ++a) {
    const double u0 = expected_utility(model, profile, truthful, a);
    double best = u0;
    for (const auto& report : reports) {
      const auto alloc = mechanism.exact_allocation(profile.with_report(a, report));
      best = std::max(best, expected_utility(model, profile, alloc, a));
    }
    ratios[a] = incentive_ratio_from(u0, best);
  }
  return ratios;
}

}  // namespace emergent
