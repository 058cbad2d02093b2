#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <vector>

#include "emergent/gflownet/state.hpp"

namespace emergent::gfn {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// One network evaluation on a non-terminal state. Vectors are indexed by
/// cell (agent * n + item); infeasible cells carry -inf.
struct PolicyOutput {
  std::vector<double> logits;
  std::vector<double> log_probs;
  double log_flow = 0.0;

  double prob(std::size_t cell) const { return std::exp(log_probs[cell]); }
};

/// Log-softmax restricted to the undecided cells of s; others get -inf.
inline std::vector<double> masked_log_softmax(std::span<const double> logits, const MatchState& s) {
  std::vector<double> out(logits.size(), kNegInf);
  double hi = kNegInf;
  for (std::size_t c = 0; c < logits.size(); ++c)
    if (s.cell(c) == Cell::Undecided) hi = std::max(hi, logits[c]);
  double z = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c)
    if (s.cell(c) == Cell::Undecided) z += std::exp(logits[c] - hi);
  const double log_z = hi + std::log(z);
  for (std::size_t c = 0; c < logits.size(); ++c)
    if (s.cell(c) == Cell::Undecided) out[c] = logits[c] - log_z;
  return out;
}

/// Gradient of log P_F(chosen | s) with respect to the logits, scaled by `scale`,
/// accumulated into `grad_logits`.
inline void accumulate_log_prob_grad(const PolicyOutput& out, std::size_t chosen, double scale,
                                     std::span<double> grad_logits) {
  for (std::size_t c = 0; c < out.log_probs.size(); ++c) {
    if (out.log_probs[c] == kNegInf) continue;
    grad_logits[c] -= scale * std::exp(out.log_probs[c]);
  }
  grad_logits[chosen] += scale;
}

/// A differentiable forward policy with a state-flow head.
template <class M>
concept PolicyNetwork =
    requires(const M& m, M& mut, const PreferenceProfile& p, const MatchState& s,
             typename M::Tape& tape, std::span<const double> g, std::span<double> out) {
      { m.forward(p, s, &tape) } -> std::same_as<PolicyOutput>;
      m.backward(tape, g, 0.0, out);
      { m.parameter_count() } -> std::convertible_to<std::size_t>;
      { mut.parameters() } -> std::same_as<std::span<double>>;
    };

}  // namespace emergent::gfn
