// emergent: generate markets, train samplers and evaluate matching mechanisms.
//
//   emergent gen-data   --n 3 --count 4000 --seed 1 --out train_n3.jsonl
//   emergent train      --data train_n3.jsonl --temperature 1 --out model.ckpt
//   emergent eval       --data test_n3.jsonl --model model.ckpt --out report.csv
//   emergent sweep-temp --data train_n3.jsonl --test test_n3.jsonl --temperatures 0.5 1 2 --out sweep.csv
//   emergent scale-test --base model.ckpt --sizes 4 5 --out scale.csv

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "emergent/experiments.hpp"

namespace {

using namespace emergent;

void add_train_flags(CLI::App* sub, cli::TrainOptions& o, bool with_temperature) {
  if (with_temperature) {
    sub->add_option("--temperature,-T", o.temperature, "Reward temperature")->check(CLI::PositiveNumber);
  }
  sub->add_option("--encoder", o.encoder, "graph or tabular")->check(CLI::IsMember({"graph", "tabular"}));
  sub->add_option("--steps", o.steps, "Gradient steps (0: size-dependent default)");
  sub->add_option("--hidden", o.hidden, "Graph encoder width");
  sub->add_option("--layers", o.layers, "Graph encoder message-passing layers");
  sub->add_option("--objective", o.objective, "fl or db")->check(CLI::IsMember({"fl", "db"}));
  sub->add_option("--batch", o.batch_size, "Transitions per gradient step");
  sub->add_option("--rollouts", o.rollouts_per_iteration, "Trajectories sampled per iteration");
  sub->add_option("--lr", o.learning_rate, "Adam learning rate");
  sub->add_option("--log-every", o.log_every, "Steps per loss-curve record");
}

void add_eval_flags(CLI::App* sub, cli::EvalOptions& o) {
  sub->add_option("--ir", o.ir_mode, "Incentive ratio: exact, sampled or none")
      ->check(CLI::IsMember({"exact", "sampled", "none"}));
  sub->add_option("--agents", o.agents_per_profile, "Agents probed per profile (0: min(n,5))");
  sub->add_option("--misreports", o.misreports_per_agent, "Random misreports per probed agent");
  sub->add_option("--mech-samples", o.mech_samples, "Draws per utility estimate for samplers");
  sub->add_option("--draws", o.draws, "Draws per profile for AR when no exact allocation exists");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluate one-sided matching mechanisms and train GFlowNet samplers"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string out;
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--threads", threads, "Worker threads for evaluation")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Primary output path");

  cli::GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a dataset of uniform random profiles");
  gen_cmd->add_option("--n", gen.n, "Market size")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--count", gen.count, "Number of profiles (0: default for n)");

  cli::TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train a sampler and write a checkpoint");
  train_cmd->add_option("--data", tr.data, "Training dataset")->required();
  add_train_flags(train_cmd, tr, true);

  cli::EvalOptions ev;
  ev.ir_mode = "exact";
  auto* eval_cmd = app.add_subcommand("eval", "Score mechanisms on a dataset");
  eval_cmd->add_option("--data", ev.data, "Evaluation dataset")->required();
  eval_cmd->add_option("--model", ev.models, "Trained checkpoint (repeatable)");
  eval_cmd->add_option("--label", ev.labels, "Report name per --model");
  eval_cmd->add_option("--mechanisms", ev.mechanisms, "Baselines to score (RSD and RM always run)");
  add_eval_flags(eval_cmd, ev);

  cli::SweepOptions sw;
  sw.eval.ir_mode = "exact";
  auto* sweep_cmd = app.add_subcommand("sweep-temp", "Train and score one sampler per temperature");
  sweep_cmd->add_option("--data", sw.train.data, "Training dataset")->required();
  sweep_cmd->add_option("--test", sw.test_data, "Evaluation dataset")->required();
  sweep_cmd->add_option("--temperatures", sw.temperatures, "Temperatures to sweep")->required();
  sweep_cmd->add_flag("--reuse", sw.reuse, "Load existing per-temperature checkpoints");
  add_train_flags(sweep_cmd, sw.train, false);
  add_eval_flags(sweep_cmd, sw.eval);

  cli::ScaleOptions sc;
  std::vector<std::string> native_specs;
  auto* scale_cmd = app.add_subcommand("scale-test", "Apply a model trained at one size to others");
  scale_cmd->add_option("--base", sc.base, "Graph-encoder checkpoint")->required();
  scale_cmd->add_option("--sizes", sc.sizes, "Market sizes to test");
  scale_cmd->add_option("--native", native_specs, "Per-size model as n:path (repeatable)");
  scale_cmd->add_option("--native-steps", sc.native_steps, "Steps for per-size models trained here");
  scale_cmd->add_option("--train-count", sc.train_count, "Training profiles per size");
  scale_cmd->add_option("--test-count", sc.test_count, "Test profiles per size");
  scale_cmd->add_option("--draws", sc.draws, "Draws per profile when AR is sampled");
  scale_cmd->add_flag("--reuse", sc.reuse, "Load per-size checkpoints left by an earlier run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitConfig;
  }

  try {
    if (gen_cmd->parsed()) {
      gen.seed = seed;
      gen.out = out;
      cli::cmd_gen_data(gen);
    } else if (train_cmd->parsed()) {
      tr.seed = seed;
      tr.out = out;
      const auto t = cli::cmd_train(tr);
      std::cout << "trained " << gfn::encoder_name(t.model) << " model for " << t.info.steps
                << " steps, final batch loss " << t.result.last_batch_loss << "\n";
    } else if (eval_cmd->parsed()) {
      ev.seed = seed;
      ev.threads = threads;
      ev.out = out;
      cli::cmd_eval(ev, &std::cout);
    } else if (sweep_cmd->parsed()) {
      sw.train.seed = seed;
      sw.eval.seed = seed;
      sw.eval.threads = threads;
      sw.out = out;
      for (const auto& row : cli::cmd_sweep_temp(sw)) {
        std::cout << "T=" << row.temperature << "  AR " << row.evaluation.report.mean_ar << "  IR "
                  << row.evaluation.report.ir << "\n";
      }
    } else if (scale_cmd->parsed()) {
      for (const auto& spec : native_specs) {
        const auto colon = spec.find(':');
        if (colon == std::string::npos) throw ConfigError("--native expects n:path, got " + spec);
        sc.native[std::stoul(spec.substr(0, colon))] = spec.substr(colon + 1);
      }
      sc.seed = seed;
      sc.threads = threads;
      sc.out = out;
      for (const auto& row : cli::cmd_scale_test(sc)) {
        std::cout << "n=" << row.n << "  gap " << row.gap() << "  base " << row.ar_base << "  native "
                  << row.ar_native << "  RSD " << row.ar_rsd << "\n";
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return cli::kExitOk;
}
