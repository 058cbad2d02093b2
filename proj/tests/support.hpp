#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "emergent/core.hpp"

namespace emergent::fixtures {

/// Every labelled profile of size n: (n!)^n of them.
inline std::vector<PreferenceProfile> all_profiles(std::size_t n) {
  std::vector<std::vector<Item>> rankings;
  std::vector<Item> r(n);
  std::iota(r.begin(), r.end(), Item{0});
  do rankings.push_back(r);
  while (std::next_permutation(r.begin(), r.end()));

  std::vector<PreferenceProfile> out;
  std::vector<std::size_t> digit(n, 0);
  while (true) {
    std::vector<std::vector<Item>> rows(n);
    for (std::size_t a = 0; a < n; ++a) rows[a] = rankings[digit[a]];
    out.emplace_back(rows);
    std::size_t k = 0;
    while (k < n && ++digit[k] == rankings.size()) digit[k++] = 0;
    if (k == n) break;
  }
  return out;
}

inline PreferenceProfile identical_profile(std::size_t n) {
  std::vector<Item> row(n);
  std::iota(row.begin(), row.end(), Item{0});
  return PreferenceProfile(std::vector<std::vector<Item>>(n, row));
}

/// Agent a ranks item a first; the rest follow in index order.
inline PreferenceProfile disjoint_tops_profile(std::size_t n) {
  std::vector<std::vector<Item>> rows(n);
  for (std::size_t a = 0; a < n; ++a) {
    rows[a].push_back(a);
    for (std::size_t i = 0; i < n; ++i)
      if (i != a) rows[a].push_back(i);
  }
  return PreferenceProfile(rows);
}

}  // namespace emergent::fixtures
