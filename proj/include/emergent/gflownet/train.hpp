#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "emergent/gflownet/adam.hpp"
#include "emergent/gflownet/losses.hpp"
#include "emergent/profilegen.hpp"
#include "emergent/random.hpp"

namespace emergent::gfn {

/// Samples one trajectory from the forward policy, masking guarantees a perfect matching.
template <PolicyNetwork M>
Trajectory rollout(const M& model, const PreferenceProfile& profile, Rng& rng) {
  Trajectory traj;
  traj.states.reserve(profile.n() + 1);
  traj.actions.reserve(profile.n());
  traj.states.push_back(initial_state(profile));
  std::vector<double> probs;
  while (!traj.states.back().is_terminal()) {
    const MatchState& s = traj.states.back();
    const PolicyOutput out = model.forward(profile, s, nullptr);
    probs.resize(out.log_probs.size());
    for (std::size_t c = 0; c < probs.size(); ++c) probs[c] = std::exp(out.log_probs[c]);
    const std::size_t cell = rng.categorical(probs);
    const Action act{cell / s.n(), cell % s.n()};
    traj.actions.push_back(act);
    traj.states.push_back(s.apply(act.agent, act.item));
  }
  return traj;
}

template <PolicyNetwork M>
Trajectory rollout(const M& model, const PreferenceProfile& profile, std::uint64_t seed) {
  Rng rng(seed);
  return rollout(model, profile, rng);
}

struct TrainConfig {
  std::size_t steps = 20000;
  std::size_t batch_size = 64;
  std::size_t rollouts_per_iteration = 16;
  double learning_rate = 1e-3;
  Objective objective = Objective::ForwardLooking;
  std::uint64_t seed = 0;
  std::size_t log_every = 100;
};

/// Default gradient-step budget per market size.
inline std::size_t default_steps(std::size_t n) { return n <= 3 ? 20000 : 100000; }

struct LossRecord {
  std::size_t step = 0;
  double loss = 0.0;            // mean batch loss since the previous record
  double mean_ar_sample = 0.0;  // mean AR of rollouts drawn since the previous record
};

struct TrainResult {
  std::vector<LossRecord> curve;
  double last_batch_loss = 0.0;
};

/// On-policy training: roll out trajectories on randomly drawn profiles,
/// split them into transitions, and take one optimizer step per shuffled
/// batch. Deterministic for a given seed.
template <PolicyNetwork M>
TrainResult train(M& model, const Dataset& data, const EnergySpec& spec, const TrainConfig& config,
                  const std::function<void(const LossRecord&)>& on_record = {}) {
  spec.validate();
  if (data.profiles.empty()) throw ConfigError("train: dataset is empty");
  if (config.batch_size == 0 || config.rollouts_per_iteration == 0) {
    throw ConfigError("train: batch size and rollouts per iteration must be positive");
  }
  if constexpr (requires { model.register_profile(data.profiles.front()); }) {
    for (const auto& p : data.profiles) model.register_profile(p);
  }

  Rng rng(config.seed);
  Adam adam(config.learning_rate);
  std::vector<double> grads(model.parameter_count());
  std::vector<Transition> buffer;
  TrainResult result;

  double window_loss = 0.0, window_ar = 0.0, last_ar = 0.0;
  std::size_t window_batches = 0, window_rollouts = 0, step = 0;
  const std::size_t log_every = std::max<std::size_t>(config.log_every, 1);

  while (step < config.steps) {
    for (std::size_t r = 0; r < config.rollouts_per_iteration; ++r) {
      const PreferenceProfile& profile = data.profiles[rng.index(data.profiles.size())];
      const Trajectory traj = rollout(model, profile, rng);
      window_ar += average_rank(to_matching(traj.terminal(), profile));
      ++window_rollouts;
      for (std::size_t k = 0; k < traj.length(); ++k) {
        buffer.push_back({&profile, traj.states[k], traj.actions[k], traj.states[k + 1]});
      }
    }
    rng.shuffle(buffer);
    while (buffer.size() >= config.batch_size && step < config.steps) {
      std::fill(grads.begin(), grads.end(), 0.0);
      const double weight = 1.0 / static_cast<double>(config.batch_size);
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < config.batch_size; ++b) {
        batch_loss += transition_loss(model, buffer[buffer.size() - 1 - b], spec, config.objective,
                                      grads, weight);
      }
      buffer.resize(buffer.size() - config.batch_size);
      batch_loss *= weight;
      bool finite = std::isfinite(batch_loss);
      for (double g : grads) finite = finite && std::isfinite(g);
      if (!finite) {
        std::ostringstream os;
        os << "training diverged at step " << step << ": batch loss " << batch_loss;
        if (!result.curve.empty()) {
          os << ", last recorded loss " << result.curve.back().loss << " at step "
             << result.curve.back().step;
        }
        throw TrainingError(os.str());
      }
      adam.step(model.parameters(), grads);
      ++step;
      result.last_batch_loss = batch_loss;
      window_loss += batch_loss;
      ++window_batches;
      if (step % log_every == 0 || step == config.steps) {
        if (window_rollouts) last_ar = window_ar / static_cast<double>(window_rollouts);
        LossRecord rec{step, window_loss / static_cast<double>(window_batches), last_ar};
        result.curve.push_back(rec);
        if (on_record) on_record(rec);
        window_loss = window_ar = 0.0;
        window_batches = window_rollouts = 0;
      }
    }
  }
  return result;
}

}  // namespace emergent::gfn
