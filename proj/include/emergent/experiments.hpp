#pragma once

// Experiment commands behind the command-line tool. Every command writes its
// outputs plus a one-line JSON echo of the resolved configuration next to
// the primary output (`<out>.config.json`).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emergent/gflownet/checkpoint.hpp"
#include "emergent/gflownet/emergent.hpp"
#include "emergent/metrics.hpp"
#include "emergent/profilegen.hpp"

namespace emergent::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitFormat = 3, kExitTraining = 4 };

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw InputError("write failed: " + path);
}

inline std::string config_echo_path(const std::string& out) { return out + ".config.json"; }

inline void write_config_echo(const std::string& out, Json config) {
  config["rng"] = std::string(kRngFamily) + "/v" + std::to_string(kRngVersion);
  write_text(config_echo_path(out), config.dump() + "\n");
}

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void require_out(const std::string& out, const char* command) {
  if (out.empty()) throw ConfigError(std::string(command) + ": --out is required");
}

// gen-data ------------------------------------------------------------------

struct GenDataOptions {
  std::size_t n = 3;
  std::size_t count = 0;  // 0 selects the default training-set size for n
  std::uint64_t seed = 0;
  std::string out;
};

inline Dataset cmd_gen_data(const GenDataOptions& o) {
  require_out(o.out, "gen-data");
  if (o.n == 0) throw ConfigError("gen-data: --n must be at least 1");
  const std::size_t count = o.count ? o.count : default_count(o.n, Split::Train);
  Dataset d = generate(o.n, count, o.seed);
  save(d, o.out);
  write_config_echo(o.out, {{"command", "gen-data"},
                            {"n", o.n},
                            {"count", count},
                            {"seed", o.seed},
                            {"out", o.out}});
  return d;
}

// train ---------------------------------------------------------------------

struct TrainOptions {
  std::string data;
  double temperature = 1.0;
  std::string encoder = "graph";
  std::size_t steps = 0;  // 0 selects default_steps(n)
  std::size_t hidden = 256;
  std::size_t layers = 5;
  std::string objective = "fl";
  std::size_t batch_size = 64;
  std::size_t rollouts_per_iteration = 16;
  double learning_rate = 1e-3;
  std::size_t log_every = 100;
  std::uint64_t seed = 0;
  std::string out;
};

inline gfn::Objective parse_objective(const std::string& s) {
  if (s == "fl") return gfn::Objective::ForwardLooking;
  if (s == "db") return gfn::Objective::DetailedBalance;
  throw ConfigError("unknown objective '" + s + "' (expected fl or db)");
}

struct TrainedModel {
  gfn::AnyPolicy model;
  gfn::CheckpointInfo info;
  gfn::TrainResult result;
};

inline Json train_options_json(const TrainOptions& o, std::size_t n, std::size_t steps) {
  return {{"data", o.data},          {"n", n},
          {"temperature", o.temperature}, {"encoder", o.encoder},
          {"steps", steps},          {"hidden", o.hidden},
          {"layers", o.layers},      {"objective", o.objective},
          {"batch_size", o.batch_size}, {"rollouts_per_iteration", o.rollouts_per_iteration},
          {"learning_rate", o.learning_rate}, {"log_every", o.log_every},
          {"seed", o.seed}};
}

/// Trains a fresh model on `data` as configured by `o` (o.data is only echoed).
inline TrainedModel train_model(const Dataset& data, const TrainOptions& o) {
  const std::size_t n = data.n;
  const gfn::EnergySpec spec{o.temperature};
  spec.validate();
  gfn::TrainConfig tc;
  tc.steps = o.steps ? o.steps : gfn::default_steps(n);
  tc.batch_size = o.batch_size;
  tc.rollouts_per_iteration = o.rollouts_per_iteration;
  tc.learning_rate = o.learning_rate;
  tc.objective = parse_objective(o.objective);
  tc.seed = derive_seed(o.seed, 1);
  tc.log_every = o.log_every;
  gfn::CheckpointInfo info{n, o.temperature, o.seed, tc.objective, tc.steps};
  if (o.encoder == "tabular") {
    if (n > gfn::kMaxTabularN) {
      throw ConfigError("tabular encoder supports n <= " + std::to_string(gfn::kMaxTabularN) +
                        ", dataset has n=" + std::to_string(n));
    }
    gfn::TabularPolicy model(n);
    auto result = gfn::train(model, data, spec, tc);
    return {gfn::AnyPolicy(std::move(model)), info, std::move(result)};
  }
  if (o.encoder == "graph") {
    if (o.hidden == 0 || o.layers == 0) throw ConfigError("graph encoder needs positive --hidden and --layers");
    gfn::GraphPolicy model({o.hidden, o.layers});
    model.initialize(derive_seed(o.seed, 0));
    auto result = gfn::train(model, data, spec, tc);
    return {gfn::AnyPolicy(std::move(model)), info, std::move(result)};
  }
  throw ConfigError("unknown encoder '" + o.encoder + "' (expected graph or tabular)");
}

inline std::string loss_csv_path(const std::string& out) { return out + ".loss.csv"; }

inline std::string format_loss_csv(const std::vector<gfn::LossRecord>& curve) {
  std::string s = "step,loss,mean_ar_sample\n";
  char buf[128];
  for (const auto& r : curve) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10f\n", r.step, r.loss, r.mean_ar_sample);
    s += buf;
  }
  return s;
}

inline TrainedModel cmd_train(const TrainOptions& o) {
  require_out(o.out, "train");
  const Dataset data = load(o.data);
  TrainedModel t = train_model(data, o);
  gfn::save_checkpoint(o.out, t.model, t.info);
  write_text(loss_csv_path(o.out), format_loss_csv(t.result.curve));
  Json echo = train_options_json(o, data.n, t.info.steps);
  echo["command"] = "train";
  echo["out"] = o.out;
  write_config_echo(o.out, std::move(echo));
  return t;
}

// eval ----------------------------------------------------------------------

inline IrMode parse_ir_mode(const std::string& s) {
  if (s == "exact") return IrMode::Exact;
  if (s == "sampled") return IrMode::Sampled;
  if (s == "none") return IrMode::None;
  throw ConfigError("unknown IR mode '" + s + "' (expected exact, sampled or none)");
}

inline std::unique_ptr<Mechanism> make_baseline(const std::string& name) {
  if (name == "RSD") return std::make_unique<RsdMechanism>();
  if (name == "PS") return std::make_unique<PsMechanism>();
  if (name == "RM") return std::make_unique<RmMechanism>();
  throw ConfigError("unknown mechanism '" + name + "' (expected RSD, PS or RM)");
}

inline std::shared_ptr<const gfn::AnyPolicy> load_model_for(const std::string& path, std::size_t n,
                                                            gfn::CheckpointInfo* info = nullptr) {
  gfn::Checkpoint ck = gfn::load_checkpoint(path);
  if (const auto* tab = std::get_if<gfn::TabularPolicy>(&ck.model); tab && tab->n() != n) {
    throw ConfigError("tabular checkpoint " + path + " was trained at n=" + std::to_string(tab->n()) +
                      " but the dataset has n=" + std::to_string(n));
  }
  if (info) *info = ck.info;
  return std::make_shared<const gfn::AnyPolicy>(std::move(ck.model));
}

struct EvalOptions {
  std::string data;
  std::vector<std::string> models;
  std::vector<std::string> labels;  // parallel to models; defaults to EMERGENT or EMERGENT_T<T>
  std::vector<std::string> mechanisms{"RSD", "PS", "RM"};
  std::string ir_mode = "exact";
  std::size_t agents_per_profile = 0;
  std::size_t misreports_per_agent = 200;
  std::size_t mech_samples = 256;
  std::size_t draws = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string out;
};

struct EvalOutcome {
  std::vector<MechanismReport> reports;
  std::vector<Evaluation> evaluations;  // parallel to reports
};

inline EvalConfig eval_config_of(const EvalOptions& o) {
  EvalConfig c;
  c.ir_mode = parse_ir_mode(o.ir_mode);
  c.agents_per_profile = o.agents_per_profile;
  c.misreports_per_agent = o.misreports_per_agent;
  c.mech_samples = o.mech_samples;
  c.draws = o.draws;
  c.seed = o.seed;
  c.threads = o.threads;
  return c;
}

inline std::string format_emt_table(const std::vector<MechanismReport>& reports) {
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %10s %10s %10s %10s\n", "mechanism", "AR", "RE", "IR", "EMT");
  s += buf;
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-16s %10.4f %10.4f %10.4f %10.4f\n", r.mechanism_name.c_str(),
                  r.mean_ar, r.re, r.ir, r.emt);
    s += buf;
  }
  return s;
}

inline EvalOutcome evaluate_all(const Dataset& data, const EvalOptions& o) {
  const EvalConfig config = eval_config_of(o);
  if (!o.labels.empty() && o.labels.size() != o.models.size()) {
    throw ConfigError("eval: give one --label per --model");
  }
  std::vector<std::string> names = o.mechanisms;
  for (const char* anchor : {"RSD", "RM"})
    if (std::find(names.begin(), names.end(), anchor) == names.end()) names.insert(names.begin(), anchor);

  std::vector<std::unique_ptr<Mechanism>> mechanisms;
  for (const auto& name : names) mechanisms.push_back(make_baseline(name));
  for (std::size_t k = 0; k < o.models.size(); ++k) {
    gfn::CheckpointInfo info;
    auto model = load_model_for(o.models[k], data.n, &info);
    std::string label = !o.labels.empty()        ? o.labels[k]
                        : o.models.size() == 1 ? std::string("EMERGENT")
                                               : "EMERGENT_T" + format_real(info.temperature);
    mechanisms.push_back(std::make_unique<gfn::EmergentMechanism>(std::move(model), label));
  }

  EvalOutcome out;
  for (const auto& m : mechanisms) {
    out.evaluations.push_back(evaluate(*m, data, config));
    out.reports.push_back(out.evaluations.back().report);
  }
  auto find = [&](const char* name) -> const MechanismReport& {
    for (const auto& r : out.reports)
      if (r.mechanism_name == name) return r;
    throw ConfigError(std::string("eval: anchor mechanism ") + name + " missing");
  };
  if (config.ir_mode == IrMode::None) {
    for (auto& r : out.reports) r.re_norm = r.ir_norm = r.emt = std::nan("");
  } else {
    out.reports = normalize_and_emt(out.reports, find("RSD"), find("RM"));
  }
  return out;
}

inline EvalOutcome cmd_eval(const EvalOptions& o, std::ostream* table = nullptr) {
  require_out(o.out, "eval");
  const Dataset data = load(o.data);
  EvalOutcome outcome = evaluate_all(data, o);
  write_text(o.out, format_report_csv(outcome.reports));
  write_config_echo(o.out, {{"command", "eval"},
                            {"data", o.data},
                            {"n", data.n},
                            {"models", o.models},
                            {"labels", o.labels},
                            {"mechanisms", o.mechanisms},
                            {"ir_mode", o.ir_mode},
                            {"agents_per_profile", o.agents_per_profile},
                            {"misreports_per_agent", o.misreports_per_agent},
                            {"mech_samples", o.mech_samples},
                            {"draws", o.draws},
                            {"seed", o.seed},
                            {"threads", o.threads},
                            {"out", o.out}});
  if (table) *table << format_emt_table(outcome.reports);
  return outcome;
}

// sweep-temp ----------------------------------------------------------------

struct SweepOptions {
  TrainOptions train;  // train.data is the training set, train.out is unused
  std::string test_data;
  std::vector<double> temperatures;
  EvalOptions eval;  // only the sampling parameters, seed and threads are used
  bool reuse = false;
  std::string out;
};

struct SweepRow {
  double temperature = 0.0;
  Evaluation evaluation;
};

inline std::string sweep_checkpoint_path(const std::string& out, double temperature) {
  return out + ".T" + format_real(temperature) + ".ckpt";
}

inline std::vector<SweepRow> cmd_sweep_temp(const SweepOptions& o) {
  require_out(o.out, "sweep-temp");
  if (o.temperatures.size() < 2) throw ConfigError("sweep-temp needs at least two temperatures");
  for (double t : o.temperatures)
    if (!(t > 0.0)) throw ConfigError("sweep-temp: temperatures must be positive");
  const Dataset train_set = load(o.train.data);
  const Dataset test_set = load(o.test_data);
  if (train_set.n != test_set.n) throw ConfigError("sweep-temp: training and test sets differ in n");
  const EvalConfig config = eval_config_of(o.eval);

  std::vector<SweepRow> rows;
  std::string csv = "T,mean_ar,ir\n";
  std::string per_profile = "T,profile,ar,ir\n";
  char buf[160];
  for (double t : o.temperatures) {
    const std::string ckpt = sweep_checkpoint_path(o.out, t);
    std::shared_ptr<const gfn::AnyPolicy> model;
    if (o.reuse && std::filesystem::exists(ckpt)) {
      gfn::CheckpointInfo info;
      model = load_model_for(ckpt, test_set.n, &info);
      if (info.temperature != t) throw ConfigError("checkpoint " + ckpt + " was trained at another temperature");
    } else {
      TrainOptions to = o.train;
      to.temperature = t;
      TrainedModel trained = train_model(train_set, to);
      gfn::save_checkpoint(ckpt, trained.model, trained.info);
      write_text(loss_csv_path(ckpt), format_loss_csv(trained.result.curve));
      model = std::make_shared<const gfn::AnyPolicy>(std::move(trained.model));
    }
    const gfn::EmergentMechanism mech(model, "EMERGENT_T" + format_real(t));
    SweepRow row{t, evaluate(mech, test_set, config)};
    std::snprintf(buf, sizeof buf, "%s,%.10f,%.10f\n", format_real(t).c_str(),
                  row.evaluation.report.mean_ar, row.evaluation.report.ir);
    csv += buf;
    for (std::size_t p = 0; p < row.evaluation.per_profile.size(); ++p) {
      const auto& s = row.evaluation.per_profile[p];
      std::snprintf(buf, sizeof buf, "%s,%zu,%.10f,%.10f\n", format_real(t).c_str(), p, s.ar, s.ir);
      per_profile += buf;
    }
    rows.push_back(std::move(row));
  }
  write_text(o.out, csv);
  write_text(o.out + ".profiles.csv", per_profile);
  Json echo = train_options_json(o.train, train_set.n, o.train.steps);
  echo["command"] = "sweep-temp";
  echo["test_data"] = o.test_data;
  echo["temperatures"] = o.temperatures;
  echo["ir_mode"] = o.eval.ir_mode;
  echo["agents_per_profile"] = o.eval.agents_per_profile;
  echo["misreports_per_agent"] = o.eval.misreports_per_agent;
  echo["mech_samples"] = o.eval.mech_samples;
  echo["draws"] = o.eval.draws;
  echo["eval_seed"] = o.eval.seed;
  echo["reuse"] = o.reuse;
  echo["out"] = o.out;
  write_config_echo(o.out, std::move(echo));
  return rows;
}

// scale-test ----------------------------------------------------------------

struct ScaleOptions {
  std::string base;
  std::vector<std::size_t> sizes{4, 5, 6, 7};
  std::map<std::size_t, std::string> native;  // pre-trained models per size
  std::size_t native_steps = 0;               // 0 selects default_steps(n)
  std::size_t train_count = 0;                // 0 selects default_count(n, Train)
  std::size_t test_count = 0;                 // 0 selects default_count(n, Test)
  std::size_t draws = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool reuse = false;
  std::string out;
};

struct ScaleRow {
  std::size_t n = 0;
  double ar_base = 0.0;
  double ar_native = 0.0;
  double ar_rsd = 0.0;
  double gap() const { return ar_base - ar_native; }
};

inline std::string scale_checkpoint_path(const std::string& out, std::size_t n) {
  return out + ".n" + std::to_string(n) + ".ckpt";
}

inline std::vector<ScaleRow> cmd_scale_test(const ScaleOptions& o) {
  require_out(o.out, "scale-test");
  if (o.sizes.empty()) throw ConfigError("scale-test: no market sizes given");
  gfn::Checkpoint base = gfn::load_checkpoint(o.base);
  const auto* base_graph = std::get_if<gfn::GraphPolicy>(&base.model);
  if (!base_graph) {
    throw CapabilityError("scale-test needs a graph-encoder base model; tabular parameters are tied to one market size");
  }
  const gfn::CheckpointInfo base_info = base.info;
  const gfn::GraphEncoderConfig shape = base_graph->config();
  auto base_model = std::make_shared<const gfn::AnyPolicy>(std::move(base.model));
  const gfn::EmergentMechanism base_mech(base_model, "EMERGENT_BASE");
  EvalConfig config;
  config.ir_mode = IrMode::None;
  config.draws = o.draws;
  config.seed = o.seed;
  config.threads = o.threads;

  std::vector<ScaleRow> rows;
  std::string csv = "n,ar_gap,ar_base,ar_native,ar_rsd\n";
  char buf[200];
  for (std::size_t n : o.sizes) {
    if (n == 0) throw ConfigError("scale-test: market sizes must be positive");
    const Dataset test = generate(n, o.test_count ? o.test_count : default_count(n, Split::Test),
                                  derive_seed(o.seed, 2 * n));
    ScaleRow row{n};
    row.ar_base = evaluate(base_mech, test, config).report.mean_ar;
    if (n == base_info.n) {
      row.ar_native = row.ar_base;
    } else {
      std::shared_ptr<const gfn::AnyPolicy> native;
      const std::string ckpt = scale_checkpoint_path(o.out, n);
      if (auto it = o.native.find(n); it != o.native.end()) {
        gfn::CheckpointInfo info;
        native = load_model_for(it->second, n, &info);
        if (info.n != n) throw ConfigError("native model " + it->second + " was trained at another n");
      } else if (o.reuse && std::filesystem::exists(ckpt)) {
        native = load_model_for(ckpt, n);
      } else {
        const Dataset train_set = generate(
            n, o.train_count ? o.train_count : default_count(n, Split::Train), derive_seed(o.seed, 2 * n + 1));
        TrainOptions to;
        to.temperature = base_info.temperature;
        to.encoder = "graph";
        to.hidden = shape.hidden;
        to.layers = shape.layers;
        to.objective = gfn::objective_name(base_info.objective);
        to.steps = o.native_steps;
        to.seed = derive_seed(o.seed, 1000 + n);
        TrainedModel trained = train_model(train_set, to);
        gfn::save_checkpoint(ckpt, trained.model, trained.info);
        native = std::make_shared<const gfn::AnyPolicy>(std::move(trained.model));
      }
      row.ar_native = evaluate(gfn::EmergentMechanism(native), test, config).report.mean_ar;
    }
    row.ar_rsd = evaluate(RsdMechanism(), test, config).report.mean_ar;
    std::snprintf(buf, sizeof buf, "%zu,%.10f,%.10f,%.10f,%.10f\n", n, row.gap(), row.ar_base,
                  row.ar_native, row.ar_rsd);
    csv += buf;
    rows.push_back(row);
  }
  write_text(o.out, csv);
  Json native = Json::object();
  for (const auto& [n, path] : o.native) native[std::to_string(n)] = path;
  write_config_echo(o.out, {{"command", "scale-test"},
                            {"base", o.base},
                            {"sizes", o.sizes},
                            {"native", native},
                            {"native_steps", o.native_steps},
                            {"train_count", o.train_count},
                            {"test_count", o.test_count},
                            {"draws", o.draws},
                            {"seed", o.seed},
                            {"threads", o.threads},
                            {"reuse", o.reuse},
                            {"out", o.out}});
  return rows;
}

/// Maps a library error to the tool's exit code.
inline int exit_code_for(const Error& e) {
  if (dynamic_cast<const TrainingError*>(&e)) return kExitTraining;
  if (dynamic_cast<const FormatError*>(&e)) return kExitFormat;
  return kExitConfig;
}

}  // namespace emergent::cli
