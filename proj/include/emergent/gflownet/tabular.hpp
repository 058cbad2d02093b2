#pragma once

// Exact lookup policy: one row of free parameters (n*n logits plus a log
// flow) per (profile, non-terminal state). Only for tiny markets, where it
// gives oracle-grade checks of the training objective.

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "emergent/error.hpp"
#include "emergent/gflownet/policy.hpp"

namespace emergent::gfn {

inline constexpr std::size_t kMaxTabularN = 3;

class TabularPolicy {
 public:
  struct Tape {
    std::ptrdiff_t slot = -1;
  };

  struct Key {
    std::uint64_t profile = 0;
    std::uint64_t state = 0;
    auto operator<=>(const Key&) const = default;
  };

  explicit TabularPolicy(std::size_t n) : n_(n) {
    if (n == 0 || n > kMaxTabularN) {
      throw ConfigError("tabular policy supports 1 <= n <= " + std::to_string(kMaxTabularN) +
                        ", got n=" + std::to_string(n));
    }
  }

  std::size_t n() const { return n_; }
  std::size_t row_width() const { return n_ * n_ + 1; }
  std::size_t slot_count() const { return keys_.size(); }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  const std::vector<Key>& keys() const { return keys_; }

  static std::uint64_t profile_code(const PreferenceProfile& p) {
    std::uint64_t c = 0;
    for (Agent a = 0; a < p.n(); ++a)
      for (Item i : p.row(a)) c = c * p.n() + i;
    return c;
  }

  /// Allocates zero-initialised rows for every non-terminal state of the profile's MDP.
  void register_profile(const PreferenceProfile& profile) {
    if (profile.n() != n_) throw ConfigError("tabular policy n does not match profile n");
    const auto pc = profile_code(profile);
    std::vector<MatchState> frontier{initial_state(profile)};
    while (!frontier.empty()) {
      std::vector<MatchState> next;
      for (const auto& s : frontier) {
        if (s.is_terminal()) continue;
        if (!add_slot({pc, s.code()})) continue;
        for (const auto& act : feasible_actions(s)) next.push_back(s.apply(act.agent, act.item));
      }
      frontier = std::move(next);
    }
  }

  /// Restores a layout read from a checkpoint.
  void set_table(std::vector<Key> keys, std::vector<double> params) {
    if (params.size() != keys.size() * row_width()) throw FormatError("tabular table size mismatch");
    keys_ = std::move(keys);
    params_ = std::move(params);
    index_.clear();
    for (std::size_t k = 0; k < keys_.size(); ++k) index_.emplace(keys_[k], k);
  }

  /// Unregistered (profile, state) pairs behave like a fresh row: uniform policy, log flow 0.
  PolicyOutput forward(const PreferenceProfile& profile, const MatchState& s, Tape* tape) const {
    if (s.is_terminal()) throw ContractError("forward policy is undefined on terminal states");
    const std::size_t cells = n_ * n_;
    PolicyOutput out;
    out.logits.assign(cells, 0.0);
    std::ptrdiff_t slot = -1;
    if (auto it = index_.find({profile_code(profile), s.code()}); it != index_.end()) {
      slot = static_cast<std::ptrdiff_t>(it->second);
      const double* row = params_.data() + it->second * row_width();
      out.logits.assign(row, row + cells);
      out.log_flow = row[cells];
    }
    for (std::size_t c = 0; c < cells; ++c)
      if (s.cell(c) != Cell::Undecided) out.logits[c] = kNegInf;
    out.log_probs = masked_log_softmax(out.logits, s);
    if (tape) tape->slot = slot;
    return out;
  }

  void backward(const Tape& tape, std::span<const double> grad_logits, double grad_log_flow,
                std::span<double> grads) const {
    if (tape.slot < 0) return;
    double* row = grads.data() + static_cast<std::size_t>(tape.slot) * row_width();
    const std::size_t cells = n_ * n_;
    for (std::size_t c = 0; c < cells; ++c) row[c] += grad_logits[c];
    row[cells] += grad_log_flow;
  }

 private:
  bool add_slot(const Key& key) {
    if (index_.contains(key)) return false;
    index_.emplace(key, keys_.size());
    keys_.push_back(key);
    params_.resize(params_.size() + row_width(), 0.0);
    return true;
  }

  std::size_t n_;
  std::vector<Key> keys_;
  std::map<Key, std::size_t> index_;
  std::vector<double> params_;
};

}  // namespace emergent::gfn
