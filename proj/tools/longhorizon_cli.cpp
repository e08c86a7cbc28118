/*
 * Copyright 2026 The LongHorizon Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// longhorizon: command-line front end over the library. Every subcommand
// reads and writes plain CSV / JSON files; `run` chains them all.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "longhorizon/csv.hpp"
#include "longhorizon/error.hpp"
#include "longhorizon/explore.hpp"
#include "longhorizon/model_io.hpp"
#include "longhorizon/ope.hpp"
#include "longhorizon/parallel.hpp"
#include "longhorizon/pipeline.hpp"
#include "longhorizon/policy.hpp"
#include "longhorizon/rng.hpp"
#include "longhorizon/sim.hpp"
#include "longhorizon/surrogate.hpp"

namespace fs = std::filesystem;
using namespace longhorizon;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

void AddCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config document");
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("--out", c.out, "output directory");
}

// A malformed config is a configuration error, unlike malformed data files.
Json ReadConfigFile(const std::string& path) {
  if (!fs::exists(path)) throw DataError("config file not found: " + path);
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ArgumentError("invalid JSON in config '" + path + "': " + e.what());
  }
}

PipelineConfig LoadConfig(const Common& c) {
  PipelineConfig cfg;
  if (!c.config.empty()) {
    cfg = PipelineConfigFromJson(ReadConfigFile(c.config), fs::path(c.config).parent_path());
  }
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

DatasetSchema LoadSchema(const std::string& path, const PipelineConfig& cfg) {
  if (path.empty()) {
    if (cfg.schema.surrogates.empty()) throw ArgumentError("--schema is required (or give data.schema in --config)");
    return cfg.schema;
  }
  if (!fs::exists(path)) throw DataError("schema file not found: " + path);
  return DatasetSchemaFromJson(ReadJsonFile(path));
}

fs::path OutDir(const Common& c) {
  fs::create_directories(c.out);
  return c.out;
}

void Report(const fs::path& path) { std::cout << path.string() << "\n"; }

// ---- simulate ---------------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::optional<std::string> family, profile, design, surrogate_set;
  std::optional<std::size_t> n_units, n_historical;
  std::optional<int> k_actions, horizon;
  std::optional<double> delta, drift;
};

DgpConfig SimulateConfig(const SimulateArgs& a) {
  DgpConfig dgp;
  if (!a.common.config.empty()) {
    const Json j = ReadConfigFile(a.common.config);
    dgp = j.contains("simulate") ? DgpConfigFromJson(j.at("simulate")) : DgpConfigFromJson(j);
  }
  if (a.family) dgp.family = ParseDgpFamily(*a.family);
  if (a.profile) dgp.effect_profile = ParseEffectProfile(*a.profile);
  if (a.design) dgp.design = ParseDesignKind(*a.design);
  if (a.surrogate_set) dgp.surrogate_set = ParseSurrogateSet(*a.surrogate_set);
  if (a.n_units) dgp.n_units = *a.n_units;
  if (a.n_historical) dgp.n_historical = *a.n_historical;
  if (a.k_actions) dgp.k_actions = *a.k_actions;
  if (a.horizon) dgp.horizon = *a.horizon;
  if (a.delta) dgp.surrogacy_violation = *a.delta;
  if (a.drift) dgp.comparability_drift = *a.drift;
  if (a.common.seed) dgp.seed = *a.common.seed;
  dgp.Validate();
  return dgp;
}

void RunSimulate(const SimulateArgs& a) {
  const DgpConfig dgp = SimulateConfig(a);
  const SimData sim = Generate(dgp);
  const fs::path out = OutDir(a.common);
  WriteArtifact(out / "historical.csv", [&](const fs::path& p) { WriteHistorical(sim.historical, p); });
  WriteArtifact(out / "experiment.csv", [&](const fs::path& p) { WriteExperimental(sim.experiment, p); });
  WriteArtifact(out / "experiment_outcomes.csv",
                [&](const fs::path& p) { WriteOutcomes(p, sim.experiment.unit_ids, sim.outcomes, "y"); });
  WriteArtifact(out / "ground_truth.csv", [&](const fs::path& p) { WriteGroundTruth(sim, p); });
  WriteJsonFile(out / "schema.json", ToJson(SchemaOf(sim.experiment)));
  WriteJsonFile(out / "dgp.json", ToJson(dgp));
  for (const char* f : {"historical.csv", "experiment.csv", "experiment_outcomes.csv", "ground_truth.csv",
                        "schema.json", "dgp.json"})
    Report(out / f);
  if (!sim.proxy.empty()) {
    WriteArtifact(out / "proxy.csv",
                  [&](const fs::path& p) { WriteOutcomes(p, sim.experiment.unit_ids, sim.proxy, "proxy"); });
    Report(out / "proxy.csv");
  }
}

// ---- fit-surrogate / impute -----------------------------------------------------------

struct FitSurrogateArgs {
  Common common;
  std::string historical, schema, learner;
  bool tune = false;
  bool surrogates_only = false;
};

void RunFitSurrogate(const FitSurrogateArgs& a) {
  const PipelineConfig cfg = LoadConfig(a.common);
  const DatasetSchema schema = LoadSchema(a.schema, cfg);
  const HistoricalDataset hist = LoadHistorical(a.historical, schema);
  SurrogateFitOptions fit = cfg.surrogate;
  if (!a.learner.empty()) fit.spec = LearnerSpec{ParseLearnerFamily(a.learner), {}, 0};
  if (a.tune && fit.candidates.empty()) fit.candidates = DefaultGrid(fit.spec.family);
  if (a.surrogates_only) fit.include_covariates = false;
  fit.seed = DeriveSeed(cfg.seed, "surrogate");
  const SurrogateModel model = FitSurrogateIndex(hist, fit);
  for (const auto& w : model.warnings()) std::cerr << "warning: " << w << "\n";
  const fs::path path = OutDir(a.common) / "surrogate_model.json";
  WriteJsonFile(path, ToJson(model));
  Report(path);
}

struct ImputeArgs {
  Common common;
  std::string model, experiment, schema;
  std::string column = "y_tilde";
};

void RunImpute(const ImputeArgs& a) {
  const PipelineConfig cfg = LoadConfig(a.common);
  const DatasetSchema schema = LoadSchema(a.schema, cfg);
  if (!fs::exists(a.model)) throw DataError("model file not found: " + a.model);
  const SurrogateModel model = SurrogateModelFromJson(ReadJsonFile(a.model));
  const ExperimentalDataset exp = LoadExperimental(a.experiment, schema);
  const auto imputed = model.Impute(exp);
  const fs::path path = OutDir(a.common) / "imputed.csv";
  WriteArtifact(path, [&](const fs::path& p) { WriteOutcomes(p, exp.unit_ids, imputed, a.column); });
  Report(path);
}

// ---- learn-policy / evaluate / bts-assign -------------------------------------------------

struct OutcomeArgs {
  std::string experiment, schema, outcomes;
  std::string column = "y_tilde";
};

void AddOutcomeArgs(CLI::App* cmd, OutcomeArgs& o) {
  cmd->add_option("--experiment", o.experiment, "experiment CSV")->required();
  cmd->add_option("--schema", o.schema, "dataset schema JSON");
  cmd->add_option("--outcomes", o.outcomes, "outcome CSV (unit_id, <column>)")->required();
  cmd->add_option("--outcome-column", o.column, "outcome column name");
}

struct LoadedOutcomes {
  ExperimentalDataset exp;
  std::vector<double> y;
};

LoadedOutcomes LoadWithOutcomes(const OutcomeArgs& o, const PipelineConfig& cfg) {
  const DatasetSchema schema = LoadSchema(o.schema, cfg);
  LoadedOutcomes out;
  out.exp = LoadExperimental(o.experiment, schema);
  out.y = LoadAlignedOutcomes(o.outcomes, o.column, out.exp.unit_ids);
  return out;
}

struct LearnArgs {
  Common common;
  OutcomeArgs data;
  std::string classifier;
  std::optional<int> max_depth, n_folds;
};

PolicyPipelineConfig PolicyConfig(const PipelineConfig& cfg, const std::string& classifier,
                                  const std::optional<int>& max_depth, const std::optional<int>& n_folds) {
  PolicyPipelineConfig pipe = cfg.policy;
  if (!classifier.empty()) pipe.classifier = LearnerSpec{ParseLearnerFamily(classifier), {}, 0};
  if (max_depth) pipe.classifier.hyperparameters["max_depth"] = *max_depth;
  if (n_folds) pipe.n_folds = *n_folds;
  pipe.classifier.Validate();
  pipe.seed = DeriveSeed(cfg.seed, "policy");
  return pipe;
}

void RunLearnPolicy(const LearnArgs& a) {
  const PipelineConfig cfg = LoadConfig(a.common);
  const auto data = LoadWithOutcomes(a.data, cfg);
  const PolicyPipelineConfig pipe = PolicyConfig(cfg, a.classifier, a.max_depth, a.n_folds);
  const auto result = FitPolicyPipeline(data.exp, data.y, pipe);
  for (const auto& w : result.fit.warnings) std::cerr << "warning: " << w << "\n";
  const fs::path out = OutDir(a.common);
  WriteJsonFile(out / "policy.json", ToJson(result.fit.policy));
  WriteArtifact(out / "dr_scores.csv", [&](const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw DataError("cannot open '" + p.string() + "' for writing");
    std::vector<std::string> cells{"unit_id"};
    for (int k = 0; k < data.exp.n_actions; ++k) cells.push_back("gamma_a" + std::to_string(k));
    WriteCsvRow(f, cells);
    for (std::size_t i = 0; i < data.exp.size(); ++i) {
      cells = {std::to_string(data.exp.unit_ids[i])};
      for (double g : result.scores.scores.row(i)) cells.push_back(FormatDouble(g));
      WriteCsvRow(f, cells);
    }
  });
  Report(out / "policy.json");
  Report(out / "dr_scores.csv");
}

struct EvaluateArgs {
  Common common;
  OutcomeArgs data;
  std::string policy;
  bool treat_none = false;
  std::string estimator;
  std::optional<int> bootstrap;
  std::optional<double> level;
};

void RunEvaluate(const EvaluateArgs& a) {
  const PipelineConfig cfg = LoadConfig(a.common);
  if (a.policy.empty() == !a.treat_none) throw ArgumentError("give exactly one of --policy and --treat-none");
  const auto data = LoadWithOutcomes(a.data, cfg);
  EvaluationConfig eval = cfg.evaluation;
  if (!a.estimator.empty()) eval.estimator = ParseEstimator(a.estimator);
  if (a.bootstrap) eval.bootstrap = *a.bootstrap;
  if (a.level) eval.level = *a.level;
  if (eval.bootstrap < 1) throw ArgumentError("--bootstrap must be >= 1");
  if (!(eval.level > 0.0 && eval.level < 1.0)) throw ArgumentError("--level must be in (0, 1)");
  PolicySnapshot target = PolicySnapshot::Constant(data.exp.size(), data.exp.n_actions, 0);
  std::string name = "treat_none";
  if (!a.treat_none) {
    if (!fs::exists(a.policy)) throw DataError("policy file not found: " + a.policy);
    const Policy policy = PolicyFromJson(ReadJsonFile(a.policy));
    if (policy.n_actions() != data.exp.n_actions) throw SchemaError("policy action count differs from the data");
    target = policy.Assign(data.exp.features);
    name = a.policy;
  }
  Json report = EvaluatePolicyReport(data.exp, data.y, target, a.data.column, cfg.policy.outcome_model,
                                     cfg.policy.n_folds, eval, cfg.seed);
  report["policy"] = name;
  const fs::path path = OutDir(a.common) / "evaluation.json";
  WriteJsonFile(path, report);
  Report(path);
}

struct BtsArgs {
  Common common;
  OutcomeArgs data;
  std::optional<int> replicates;
  std::optional<double> floor, ceiling;
  std::string classifier;
  std::optional<int> max_depth;
};

void RunBtsAssign(const BtsArgs& a) {
  const PipelineConfig cfg = LoadConfig(a.common);
  const auto data = LoadWithOutcomes(a.data, cfg);
  const PolicyPipelineConfig pipe = PolicyConfig(cfg, a.classifier, a.max_depth, std::nullopt);
  BtsConfig bts = cfg.bts;
  if (a.replicates) bts.replicates = *a.replicates;
  if (a.floor) bts.floor = *a.floor;
  if (a.ceiling) bts.ceiling = *a.ceiling;
  bts.seed = DeriveSeed(cfg.seed, "bts");
  bts.Validate(data.exp.n_actions);
  const BtsResult result = BootstrapThompson(data.exp, data.y, pipe, bts);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  const std::uint64_t draw_seed = DeriveSeed(cfg.seed, "assignment");
  const auto sampled = SampleActions(result.snapshot, draw_seed);
  const fs::path path = OutDir(a.common) / "bts_assignment.csv";
  WriteArtifact(path, [&](const fs::path& p) {
    WriteAssignment(p, data.exp.unit_ids, result.snapshot, sampled, draw_seed);
  });
  Report(path);
}

// ---- validate / power / diagnose ---------------------------------------------------------

struct ValidateArgs {
  Common common;
  std::vector<int> horizons{6, 12, 24, 36};
  std::vector<std::string> sets{"both", "revenue", "consumption"};
  std::optional<int> bootstrap;
  std::optional<std::size_t> n_units;
  std::optional<double> delta;
  std::optional<double> noise_s;
};

void RunValidate(const ValidateArgs& a) {
  DgpConfig dgp;
  dgp.family = DgpFamily::kSubscriber;
  // validation default; --noise-s overrides
  dgp.noise_s = 0.2;
  PipelineConfig cfg;
  if (!a.common.config.empty()) {
    const Json j = ReadConfigFile(a.common.config);
    if (j.contains("simulate")) {
      cfg = PipelineConfigFromJson(j, fs::path(a.common.config).parent_path());
      dgp = *cfg.simulate;
    } else {
      dgp = DgpConfigFromJson(j);
    }
  }
  if (a.n_units) dgp.n_units = dgp.n_historical = *a.n_units;
  if (a.delta) dgp.surrogacy_violation = *a.delta;
  if (a.noise_s) dgp.noise_s = *a.noise_s;
  if (a.common.seed) cfg.seed = *a.common.seed;
  dgp.seed = DeriveSeed(cfg.seed, "simulate");
  std::vector<SurrogateSet> sets;
  for (const auto& s : a.sets) sets.push_back(ParseSurrogateSet(s));
  ValidationOptions opt;
  opt.surrogate_model = cfg.surrogate.spec;
  opt.pipeline = cfg.policy;
  opt.test_fraction = cfg.evaluation.test_fraction;
  opt.bootstrap = a.bootstrap.value_or(200);
  opt.level = cfg.evaluation.level;
  opt.seed = cfg.seed;
  const auto report = ValidationExperiment(dgp, a.horizons, sets, opt);
  for (const auto& p : WriteValidationReport(report, OutDir(a.common))) Report(p);
}

struct PowerArgs {
  Common common;
  std::string input;
  std::string risk_column = "risk", outcome_column = "y0";
  std::size_t n = 100000;
  std::vector<double> q{0.01};
  std::vector<double> taus{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  int reps = 100;
  double alpha = 0.05;
  std::string assignment = "design";
  double sigma = 0.003, cap = 0.5;
  std::vector<double> q_negative;
  int compare_reps = 1000;
};

void RunPower(const PowerArgs& a) {
  const std::uint64_t seed = a.common.seed.value_or(0);
  ChurnPanel panel;
  if (a.input.empty()) {
    panel = SyntheticChurnPanel(a.n, DeriveSeed(seed, "panel"));
  } else {
    const CsvDocument doc = ReadCsvFile(a.input);
    const std::vector<ColumnSpec> cols{{a.risk_column, ColumnKind::kFloat}, {a.outcome_column, ColumnKind::kFloat}};
    const Table t = TableFromCsv(doc, cols);
    const auto r = t.column(a.risk_column).values();
    const auto y = t.column(a.outcome_column).values();
    panel.risk.assign(r.begin(), r.end());
    panel.churn.assign(y.begin(), y.end());
  }
  const fs::path out = OutDir(a.common);
  const fs::path path = out / "power.csv";
  WriteArtifact(path, [&](const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw DataError("cannot open '" + p.string() + "' for writing");
    const std::vector<std::string> header{"assignment", "q", "tau_effect", "power", "n_reps", "n_significant",
                                          "mean_estimate", "mean_true_att", "mean_treated_fraction"};
    WriteCsvRow(f, header);
    for (double q : a.q) {
      PowerConfig cfg;
      cfg.q = q;
      cfg.n_reps = a.reps;
      cfg.alpha = a.alpha;
      cfg.assignment = ParseDesignKind(a.assignment);
      cfg.design.sigma = a.sigma;
      cfg.design.cap = a.cap;
      for (const auto& c : PowerGrid(panel.churn, panel.risk, a.taus, cfg, DeriveSeed(seed, "power"))) {
        const std::vector<std::string> cells{
            std::string(ToString(c.assignment)), FormatDouble(c.q),          FormatDouble(c.tau_effect),
            FormatDouble(c.power),               std::to_string(c.n_reps),   std::to_string(c.n_significant),
            FormatDouble(c.mean_estimate),       FormatDouble(c.mean_true_att), FormatDouble(c.mean_treated_fraction)};
        WriteCsvRow(f, cells);
      }
    }
  });
  Report(path);
  if (!a.q_negative.empty()) {
    const fs::path cmp = out / "design_vs_uniform.csv";
    WriteArtifact(cmp, [&](const fs::path& p) {
      std::ofstream f(p, std::ios::binary);
      if (!f) throw DataError("cannot open '" + p.string() + "' for writing");
      const std::vector<std::string> header{"q_negative",         "n_reps",          "median_churn_design",
                                            "median_churn_uniform", "mean_error_design", "se_error_design",
                                            "mean_error_uniform", "se_error_uniform"};
      WriteCsvRow(f, header);
      for (double qn : a.q_negative) {
        const auto r = DesignVsUniform(panel.risk, qn, a.compare_reps, DeriveSeed(seed, "design-vs-uniform"));
        const std::vector<std::string> cells{FormatDouble(qn),
                                             std::to_string(r.n_reps),
                                             FormatDouble(r.median_churn_design),
                                             FormatDouble(r.median_churn_uniform),
                                             FormatDouble(r.mean_error_design),
                                             FormatDouble(r.se_error_design),
                                             FormatDouble(r.mean_error_uniform),
                                             FormatDouble(r.se_error_uniform)};
        WriteCsvRow(f, cells);
      }
    });
    Report(cmp);
  }
}

struct DiagnoseArgs {
  Common common;
  std::string historical, experiment, schema;
  bool surrogates_only = false;
};

void RunDiagnose(const DiagnoseArgs& a) {
  const PipelineConfig cfg = LoadConfig(a.common);
  const DatasetSchema schema = LoadSchema(a.schema, cfg);
  const HistoricalDataset hist = LoadHistorical(a.historical, schema);
  const ExperimentalDataset exp = LoadExperimental(a.experiment, schema);
  CheckSurrogateSchemas(hist, exp);
  const fs::path out = OutDir(a.common);
  if (exp.n_actions == 2) {
    const auto b = AteBiasBound(hist, exp, !a.surrogates_only);
    const Json j = {{"var_y", b.var_y},
                    {"var_a", b.var_a},
                    {"r2_y_given_s", b.r2_y_given_s},
                    {"r2_a_given_s", b.r2_a_given_s},
                    {"bound", b.bound},
                    {"linear_r2", b.linear_r2},
                    {"include_covariates", !a.surrogates_only}};
    WriteJsonFile(out / "bias_bound.json", j);
    Report(out / "bias_bound.json");
  } else {
    std::cerr << "note: the ATE bias bound needs a binary experiment; skipped\n";
  }
  WriteArtifact(out / "shift_report.csv", [&](const fs::path& p) {
    WriteShiftReport(CovariateShiftReport(hist.features, exp.features), p);
  });
  Report(out / "shift_report.csv");
}

// ---- run -------------------------------------------------------------------------------

void RunAll(const Common& c, bool out_given) {
  if (c.config.empty()) throw ArgumentError("run needs --config");
  PipelineConfig cfg = LoadConfig(c);
  if (out_given) cfg.output_dir = c.out;
  const RunManifest m = RunPipeline(cfg);
  for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
  Report(cfg.output_dir / "manifest.json");
}

int ExitCode(const std::exception& e) {
  if (dynamic_cast<const ArgumentError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return 2;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 3;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate-index policy learning, evaluation and exploration"};
  app.require_subcommand(1);
  app.fallthrough();  // --threads may follow the subcommand
  int threads = 0;
  app.add_option("--threads", threads, "thread cap (default: LONGHORIZON_THREADS or all cores)");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "generate a synthetic history / experiment pair");
  AddCommon(c_sim, sim.common);
  c_sim->add_option("--family", sim.family, "structural | subscriber");
  c_sim->add_option("--effect-profile", sim.profile, "bimodal_gap | continuous_near_zero");
  c_sim->add_option("--design", sim.design, "covariate | uniform");
  c_sim->add_option("--surrogate-set", sim.surrogate_set, "both | revenue | consumption");
  c_sim->add_option("--n-units", sim.n_units);
  c_sim->add_option("--n-historical", sim.n_historical);
  c_sim->add_option("--k-actions", sim.k_actions);
  c_sim->add_option("--horizon", sim.horizon);
  c_sim->add_option("--delta", sim.delta, "surrogacy violation");
  c_sim->add_option("--drift", sim.drift, "comparability drift");

  FitSurrogateArgs fsa;
  auto* c_fit = app.add_subcommand("fit-surrogate", "fit the surrogate index on historical data");
  AddCommon(c_fit, fsa.common);
  c_fit->add_option("--historical", fsa.historical)->required();
  c_fit->add_option("--schema", fsa.schema);
  c_fit->add_option("--learner", fsa.learner, "learner family");
  c_fit->add_flag("--tune", fsa.tune, "select hyperparameters by CV over the default grid");
  c_fit->add_flag("--surrogates-only", fsa.surrogates_only, "regress on S without covariates");

  ImputeArgs imp;
  auto* c_imp = app.add_subcommand("impute", "impute long-term outcomes for an experiment");
  AddCommon(c_imp, imp.common);
  c_imp->add_option("--model", imp.model)->required();
  c_imp->add_option("--experiment", imp.experiment)->required();
  c_imp->add_option("--schema", imp.schema);
  c_imp->add_option("--column", imp.column, "name of the imputed column");

  LearnArgs learn;
  auto* c_learn = app.add_subcommand("learn-policy", "learn a targeting policy from DR scores");
  AddCommon(c_learn, learn.common);
  AddOutcomeArgs(c_learn, learn.data);
  c_learn->add_option("--classifier", learn.classifier, "classifier family");
  c_learn->add_option("--max-depth", learn.max_depth);
  c_learn->add_option("--n-folds", learn.n_folds, "cross-fitting folds");

  EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "evaluate a policy against treat-none");
  AddCommon(c_eval, eval.common);
  AddOutcomeArgs(c_eval, eval.data);
  c_eval->add_option("--policy", eval.policy, "policy JSON");
  c_eval->add_flag("--treat-none", eval.treat_none, "evaluate the treat-none policy itself");
  c_eval->add_option("--estimator", eval.estimator, "ht | hajek | dr");
  c_eval->add_option("--bootstrap", eval.bootstrap, "bootstrap replicates");
  c_eval->add_option("--level", eval.level, "interval level");

  BtsArgs bts;
  auto* c_bts = app.add_subcommand("bts-assign", "bootstrap Thompson sampling assignment");
  AddCommon(c_bts, bts.common);
  AddOutcomeArgs(c_bts, bts.data);
  c_bts->add_option("--replicates", bts.replicates);
  c_bts->add_option("--floor", bts.floor);
  c_bts->add_option("--ceiling", bts.ceiling);
  c_bts->add_option("--classifier", bts.classifier);
  c_bts->add_option("--max-depth", bts.max_depth);

  ValidateArgs val;
  auto* c_val = app.add_subcommand("validate", "validation experiment on the subscriber simulator");
  AddCommon(c_val, val.common);
  c_val->add_option("--horizons", val.horizons)->delimiter(',');
  c_val->add_option("--sets", val.sets)->delimiter(',');
  c_val->add_option("--bootstrap", val.bootstrap);
  c_val->add_option("--n-units", val.n_units);
  c_val->add_option("--delta", val.delta);
  c_val->add_option("--noise-s", val.noise_s, "surrogate noise scale (default 0.2)");

  PowerArgs pow;
  auto* c_pow = app.add_subcommand("power", "power of churn experiments by simulation");
  AddCommon(c_pow, pow.common);
  c_pow->add_option("--input", pow.input, "CSV with risk and baseline churn columns");
  c_pow->add_option("--risk-column", pow.risk_column);
  c_pow->add_option("--outcome-column", pow.outcome_column);
  c_pow->add_option("--n", pow.n, "synthetic panel size when no --input");
  c_pow->add_option("--q", pow.q, "treated fractions")->delimiter(',');
  c_pow->add_option("--taus", pow.taus, "effect sizes")->delimiter(',');
  c_pow->add_option("--reps", pow.reps);
  c_pow->add_option("--alpha", pow.alpha);
  c_pow->add_option("--assignment", pow.assignment, "design | uniform");
  c_pow->add_option("--sigma", pow.sigma);
  c_pow->add_option("--cap", pow.cap);
  c_pow->add_option("--q-negative", pow.q_negative, "also compare design vs uniform at these shares")
      ->delimiter(',');
  c_pow->add_option("--compare-reps", pow.compare_reps);

  DiagnoseArgs diag;
  auto* c_diag = app.add_subcommand("diagnose", "bias bound and covariate-shift report");
  AddCommon(c_diag, diag.common);
  c_diag->add_option("--historical", diag.historical)->required();
  c_diag->add_option("--experiment", diag.experiment)->required();
  c_diag->add_option("--schema", diag.schema);
  c_diag->add_flag("--surrogates-only", diag.surrogates_only);

  Common run;
  auto* c_run = app.add_subcommand("run", "run the whole pipeline from a config");
  AddCommon(c_run, run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (threads > 0) parallel::SetMaxThreads(threads);

  try {
    if (c_sim->parsed()) RunSimulate(sim);
    if (c_fit->parsed()) RunFitSurrogate(fsa);
    if (c_imp->parsed()) RunImpute(imp);
    if (c_learn->parsed()) RunLearnPolicy(learn);
    if (c_eval->parsed()) RunEvaluate(eval);
    if (c_bts->parsed()) RunBtsAssign(bts);
    if (c_val->parsed()) RunValidate(val);
    if (c_pow->parsed()) RunPower(pow);
    if (c_diag->parsed()) RunDiagnose(diag);
    if (c_run->parsed()) RunAll(run, c_run->count("--out") > 0);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCode(e);
  }
  return 0;
}
