#pragma once

// Dataset-level scores: average rank, rank efficiency, incentive ratio and
// the efficiency/manipulation trade-off against the RSD and RM anchors.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "emergent/core.hpp"
#include "emergent/mechanisms.hpp"
#include "emergent/oracle.hpp"
#include "emergent/profilegen.hpp"
#include "emergent/random.hpp"

namespace emergent {

inline double rank_efficiency(double mean_ar) {
  if (!(mean_ar >= 1.0)) throw InputError("rank_efficiency: mean AR must be at least 1");
  return 1.0 / mean_ar;
}

struct MechanismReport {
  std::string mechanism_name;
  std::size_t n = 0;
  double mean_ar = 0.0;
  double re = 0.0;
  double ir = 0.0;
  double re_norm = 0.0;
  double ir_norm = 0.0;
  double emt = 0.0;
};

/// Runs body(k) for k in [0, count) on up to `threads` workers. The first
/// exception thrown by any call is rethrown after all workers finish.
template <class Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < count;) {
      try {
        body(k);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

enum class IrMode { Exact, Sampled, None };

inline const char* ir_mode_name(IrMode m) {
  switch (m) {
    case IrMode::Exact: return "exact";
    case IrMode::Sampled: return "sampled";
    case IrMode::None: return "none";
  }
  return "?";
}

struct EvalConfig {
  IrMode ir_mode = IrMode::Sampled;
  std::size_t agents_per_profile = 0;  // 0 selects min(n, 5)
  std::size_t misreports_per_agent = 200;
  std::size_t mech_samples = 256;
  std::size_t draws = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct ProfileScore {
  double ar = 0.0;
  double ir = 1.0;
};

struct Evaluation {
  MechanismReport report;
  std::vector<ProfileScore> per_profile;
};

namespace detail {

inline FractionalAllocation empirical_allocation(const Mechanism& mechanism,
                                                 const PreferenceProfile& profile,
                                                 std::size_t samples, std::uint64_t seed) {
  if (!mechanism.can_draw()) {
    throw CapabilityError(mechanism.name() + " can neither be evaluated exactly nor sampled at n=" +
                          std::to_string(profile.n()));
  }
  FractionalAllocation f(profile.n());
  const double w = 1.0 / static_cast<double>(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const Matching m = mechanism.draw(profile, derive_seed(seed, k));
    for (Agent a = 0; a < profile.n(); ++a) f.at(a, m.assignment[a]) += w;
  }
  return f;
}

}  // namespace detail

/// Allocation used for scoring: exact when the mechanism exposes one,
/// otherwise the empirical frequencies of `samples` seeded draws.
inline FractionalAllocation evaluation_allocation(const Mechanism& mechanism,
                                                  const PreferenceProfile& profile,
                                                  std::size_t samples, std::uint64_t seed) {
  if (mechanism.has_exact_allocation(profile.n())) return mechanism.exact_allocation(profile);
  return detail::empirical_allocation(mechanism, profile, samples, seed);
}

inline double profile_average_rank(const Mechanism& mechanism, const PreferenceProfile& profile,
                                   std::size_t draws, std::uint64_t seed) {
  return expected_average_rank(profile, evaluation_allocation(mechanism, profile, draws, seed));
}

/// Mean over drawn agents of max-over-reports utility divided by truthful
/// utility. Misreports are uniform permutations and the truthful report is
/// always a candidate. Sampler-type mechanisms reuse the same draw seeds for
/// every report of an agent.
inline double profile_sampled_incentive_ratio(const Mechanism& mechanism,
                                              const PreferenceProfile& profile,
                                              const UtilityModel& model,
                                              std::size_t agents_per_profile,
                                              std::size_t misreports_per_agent,
                                              std::size_t mech_samples, std::uint64_t seed) {
  const std::size_t n = profile.n();
  Rng rng(seed);
  const auto order = rng.permutation(n);
  const std::size_t agents = std::min(agents_per_profile, n);
  double sum = 0.0;
  for (std::size_t k = 0; k < agents; ++k) {
    const Agent a = order[k];
    const std::uint64_t draw_seed = rng.next();
    const double u0 = expected_utility(
        model, profile, evaluation_allocation(mechanism, profile, mech_samples, draw_seed), a);
    double best = u0;
    for (std::size_t m = 0; m < misreports_per_agent; ++m) {
      const auto report = rng.permutation(n);
      const auto alloc =
          evaluation_allocation(mechanism, profile.with_report(a, report), mech_samples, draw_seed);
      best = std::max(best, expected_utility(model, profile, alloc, a));
    }
    sum += incentive_ratio_from(u0, best);
  }
  return sum / static_cast<double>(agents);
}

inline double sampled_incentive_ratio(const Mechanism& mechanism, const Dataset& dataset,
                                      const UtilityModel& model, std::size_t agents_per_profile,
                                      std::size_t misreports_per_agent, std::size_t mech_samples,
                                      std::uint64_t seed, std::size_t threads = 1) {
  if (agents_per_profile == 0 || misreports_per_agent == 0 || mech_samples == 0) {
    throw InputError("sampled_incentive_ratio: sampling parameters must be at least 1");
  }
  std::vector<double> ratios(dataset.size());
  parallel_for(dataset.size(), threads, [&](std::size_t p) {
    ratios[p] = profile_sampled_incentive_ratio(mechanism, dataset.profiles[p], model,
                                                agents_per_profile, misreports_per_agent,
                                                mech_samples, derive_seed(seed, p));
  });
  double s = 0.0;
  for (double r : ratios) s += r;
  return s / static_cast<double>(ratios.size());
}

inline Evaluation evaluate(const Mechanism& mechanism, const Dataset& dataset,
                           const EvalConfig& config = {}, const UtilityModel& model = {}) {
  if (dataset.profiles.empty()) throw InputError("evaluate: dataset is empty");
  const std::size_t n = dataset.n;
  const std::size_t agents = config.agents_per_profile ? config.agents_per_profile : std::min<std::size_t>(n, 5);
  if (config.ir_mode == IrMode::Exact && n > kMaxExactIncentiveN) {
    throw CapabilityError("exact IR supports n <= " + std::to_string(kMaxExactIncentiveN));
  }
  Evaluation out;
  out.per_profile.resize(dataset.size());
  const std::uint64_t ar_seed = derive_seed(config.seed, 0);
  const std::uint64_t ir_seed = derive_seed(config.seed, 1);
  parallel_for(dataset.size(), config.threads, [&](std::size_t p) {
    const auto& profile = dataset.profiles[p];
    ProfileScore& score = out.per_profile[p];
    score.ar = profile_average_rank(mechanism, profile, config.draws, derive_seed(ar_seed, p));
    if (config.ir_mode == IrMode::Exact) {
      const auto ratios = exact_incentive_ratio(mechanism, profile, model);
      double s = 0.0;
      for (double r : ratios) s += r;
      score.ir = s / static_cast<double>(ratios.size());
    } else if (config.ir_mode == IrMode::Sampled) {
      score.ir = profile_sampled_incentive_ratio(mechanism, profile, model, agents,
                                                 config.misreports_per_agent, config.mech_samples,
                                                 derive_seed(ir_seed, p));
    }
  });
  MechanismReport& r = out.report;
  r.mechanism_name = mechanism.name();
  r.n = n;
  for (const auto& s : out.per_profile) {
    r.mean_ar += s.ar;
    r.ir += s.ir;
  }
  r.mean_ar /= static_cast<double>(dataset.size());
  r.ir /= static_cast<double>(dataset.size());
  r.re = rank_efficiency(r.mean_ar);
  return out;
}

inline std::vector<MechanismReport> normalize_and_emt(std::vector<MechanismReport> reports,
                                                      const MechanismReport& rsd,
                                                      const MechanismReport& rm) {
  const double dre = rm.re - rsd.re;
  const double dir = rm.ir - rsd.ir;
  if (!(dre > 0.0) || !(dir > 0.0)) {
    throw DegenerateAnchorError(
        "RSD and RM anchors do not separate (RE gap " + std::to_string(dre) + ", IR gap " +
        std::to_string(dir) + "); normalized scores are undefined");
  }
  for (auto& r : reports) {
    r.re_norm = (r.re - rsd.re) / dre;
    r.ir_norm = (r.ir - rsd.ir) / dir;
    r.emt = std::hypot(r.re_norm - 1.0, r.ir_norm);
  }
  return reports;
}

inline constexpr const char* kReportCsvHeader = "mechanism,n,mean_ar,re,ir,re_norm,ir_norm,emt";

inline std::string format_report_row(const MechanismReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%zu,%.10f,%.10f,%.10f,%.10f,%.10f,%.10f",
                r.mechanism_name.c_str(), r.n, r.mean_ar, r.re, r.ir, r.re_norm, r.ir_norm, r.emt);
  return buf;
}

inline std::string format_report_csv(const std::vector<MechanismReport>& reports) {
  std::string out = kReportCsvHeader;
  out += '\n';
  for (const auto& r : reports) {
    out += format_report_row(r);
    out += '\n';
  }
  return out;
}

/// Upper end of a one-sided percentile-bootstrap confidence interval for
/// the mean of `values`.
inline double bootstrap_mean_upper(std::span<const double> values, double confidence,
                                   std::size_t resamples, std::uint64_t seed) {
  if (values.empty()) throw InputError("bootstrap_mean_upper: no values");
  Rng rng(seed);
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) s += values[rng.index(values.size())];
    m = s / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  const auto at = static_cast<std::size_t>(std::ceil(confidence * static_cast<double>(resamples))) - 1;
  return means[std::min(at, resamples - 1)];
}

}  // namespace emergent
