// Scores the three baseline mechanisms on a small seeded n=3 market, then
// trains a tabular sampler on one profile and compares its terminal
// distribution with the reward-proportional target.

#include <cstdio>

#include "emergent/emergent.hpp"

int main() {
  using namespace emergent;

  const Dataset test = generate(3, 400, 2);
  EvalConfig config;
  config.ir_mode = IrMode::Exact;

  const RsdMechanism rsd;
  const PsMechanism ps;
  const RmMechanism rm;
  std::vector<MechanismReport> reports;
  for (const Mechanism* m : {static_cast<const Mechanism*>(&rsd), static_cast<const Mechanism*>(&ps),
                             static_cast<const Mechanism*>(&rm)}) {
    reports.push_back(evaluate(*m, test, config).report);
  }
  reports = normalize_and_emt(reports, reports[0], reports[2]);
  std::printf("%s", format_report_csv(reports).c_str());

  const Dataset one{3, 0, {test.profiles.front()}};
  gfn::TabularPolicy model(3);
  gfn::TrainConfig tc;
  tc.steps = 5000;
  gfn::train(model, one, gfn::EnergySpec{1.0}, tc);
  const auto target = exact_terminal_distribution(one.profiles[0], 1.0);
  const auto learned = gfn::policy_terminal_distribution(model, one.profiles[0]);
  std::printf("\nmatching  target   learned\n");
  for (std::size_t k = 0; k < target.size(); ++k) {
    std::printf("%8zu  %.4f   %.4f\n", k, target[k], learned[k]);
  }
  std::printf("total variation %.5f\n", total_variation(target, learned));
}
