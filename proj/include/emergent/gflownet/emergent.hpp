#pragma once

// The learned sampler exposed as a matching mechanism.

#include <map>
#include <memory>
#include <variant>
#include <vector>

#include "emergent/gflownet/graph_encoder.hpp"
#include "emergent/gflownet/tabular.hpp"
#include "emergent/gflownet/train.hpp"
#include "emergent/mechanisms.hpp"
#include "emergent/oracle.hpp"

namespace emergent::gfn {

using AnyPolicy = std::variant<TabularPolicy, GraphPolicy>;

inline const char* encoder_name(const AnyPolicy& m) {
  return std::holds_alternative<TabularPolicy>(m) ? "tabular" : "graph";
}

/// Masked action distribution at a non-terminal state.
template <PolicyNetwork M>
PolicyOutput forward_logits(const M& model, const PreferenceProfile& profile, const MatchState& s) {
  return model.forward(profile, s, nullptr);
}

inline constexpr std::size_t kMaxExactPolicyN = 4;

/// Exact terminal distribution induced by the forward policy, over all n!
/// matchings in lexicographic order. Propagates probability mass through the
/// state DAG one depth at a time.
template <PolicyNetwork M>
std::vector<double> policy_terminal_distribution(const M& model, const PreferenceProfile& profile) {
  const std::size_t n = profile.n();
  if (n > kMaxExactPolicyN) {
    throw CapabilityError("exact policy enumeration supports n <= " + std::to_string(kMaxExactPolicyN));
  }
  std::vector<double> dist(factorial(n), 0.0);
  std::map<std::uint64_t, std::pair<MatchState, double>> layer;
  const MatchState s0 = initial_state(profile);
  layer.emplace(s0.code(), std::make_pair(s0, 1.0));
  for (std::size_t depth = 0; depth < n; ++depth) {
    std::map<std::uint64_t, std::pair<MatchState, double>> next;
    for (const auto& [code, entry] : layer) {
      const auto& [s, mass] = entry;
      const PolicyOutput out = model.forward(profile, s, nullptr);
      for (std::size_t c = 0; c < out.log_probs.size(); ++c) {
        if (out.log_probs[c] == kNegInf) continue;
        MatchState child = s.apply(c / n, c % n);
        const double p = mass * std::exp(out.log_probs[c]);
        auto [it, inserted] = next.try_emplace(child.code(), child, 0.0);
        it->second.second += p;
      }
    }
    layer = std::move(next);
  }
  for (const auto& [code, entry] : layer) {
    const Matching m = to_matching(entry.first, profile);
    dist[lexicographic_index(m.assignment)] += entry.second;
  }
  return dist;
}

inline std::vector<double> policy_terminal_distribution(const AnyPolicy& model,
                                                        const PreferenceProfile& profile) {
  return std::visit([&](const auto& m) { return policy_terminal_distribution(m, profile); }, model);
}

class EmergentMechanism final : public Mechanism {
 public:
  explicit EmergentMechanism(std::shared_ptr<const AnyPolicy> model, std::string label = "EMERGENT")
      : model_(std::move(model)), label_(std::move(label)) {}

  std::string name() const override { return label_; }

  bool has_exact_allocation(std::size_t n) const override { return n <= kMaxExactPolicyN; }

  FractionalAllocation exact_allocation(const PreferenceProfile& profile) const override {
    return allocation_of_distribution(profile.n(), policy_terminal_distribution(*model_, profile));
  }

  Matching draw(const PreferenceProfile& profile, std::uint64_t seed) const override {
    const Trajectory t =
        std::visit([&](const auto& m) { return rollout(m, profile, seed); }, *model_);
    return to_matching(t.terminal(), profile);
  }

  const AnyPolicy& model() const { return *model_; }

 private:
  std::shared_ptr<const AnyPolicy> model_;
  std::string label_;
};

}  // namespace emergent::gfn
