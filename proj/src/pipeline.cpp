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

#include "longhorizon/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <type_traits>

#include "longhorizon/error.hpp"
#include "longhorizon/rng.hpp"

namespace longhorizon {
namespace {

// Reads fields of one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw ArgumentError(context_ + ": expected a JSON object");
  }

  bool Has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  const Json& Raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  T Get(const std::string& key, T fallback) {
    if (!Has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ArgumentError(context_ + "." + key + ": wrong type");
    }
  }

  void Finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ArgumentError(context_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const Json& j_;
  std::string context_;
  std::set<std::string> used_;
};

Json ColumnsToJson(const std::vector<ColumnSpec>& cols) {
  Json out = Json::array();
  for (const auto& c : cols) out.push_back({{"name", c.name}, {"kind", std::string(ToString(c.kind))}});
  return out;
}

std::vector<ColumnSpec> ColumnsFromJson(const Json& j, const std::string& context) {
  if (!j.is_array()) throw ArgumentError(context + ": expected an array of columns");
  std::vector<ColumnSpec> out;
  for (const auto& c : j) {
    ObjectReader r(c, context);
    ColumnSpec spec;
    spec.name = r.Get<std::string>("name", "");
    if (spec.name.empty()) throw ArgumentError(context + ": column without a name");
    spec.kind = ParseColumnKind(r.Get<std::string>("kind", "float"));
    r.Finish();
    out.push_back(std::move(spec));
  }
  return out;
}

Json SpecList(const std::vector<LearnerSpec>& specs) {
  Json out = Json::array();
  for (const auto& s : specs) out.push_back(ToJson(s));
  return out;
}

std::vector<LearnerSpec> SpecListFromJson(const Json& j, const std::string& context) {
  if (!j.is_array()) throw ArgumentError(context + ": expected an array of learner specs");
  std::vector<LearnerSpec> out;
  for (const auto& s : j) out.push_back(LearnerSpecFromJson(s));
  return out;
}

std::filesystem::path Resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  if (path.empty() || path.is_absolute() || base.empty()) return path;
  return base / path;
}

}  // namespace

// ---- Config JSON -------------------------------------------------------------------

Json ToJson(const DgpConfig& c) {
  return {{"family", std::string(ToString(c.family))},
          {"n_units", c.n_units},
          {"n_historical", c.n_historical},
          {"k_actions", c.k_actions},
          {"dim_x", c.dim_x},
          {"dim_s", c.dim_s},
          {"effect_profile", std::string(ToString(c.effect_profile))},
          {"min_gap", c.min_gap},
          {"surrogacy_violation", c.surrogacy_violation},
          {"confounder_strength", c.confounder_strength},
          {"comparability_drift", c.comparability_drift},
          {"noise_s", c.noise_s},
          {"noise_y", c.noise_y},
          {"design", std::string(ToString(c.design))},
          {"nonlinear_outcome", c.nonlinear_outcome},
          {"n_periods", c.n_periods},
          {"discount_periods", c.discount_periods},
          {"discount_cost", c.discount_cost},
          {"horizon", c.horizon},
          {"surrogate_set", std::string(ToString(c.surrogate_set))},
          {"seed", c.seed},
          {"coefficient_seed", c.coefficient_seed ? Json(*c.coefficient_seed) : Json(nullptr)}};
}

DgpConfig DgpConfigFromJson(const Json& j) {
  ObjectReader r(j, "simulate");
  DgpConfig c;
  c.family = ParseDgpFamily(r.Get<std::string>("family", std::string(ToString(c.family))));
  c.n_units = r.Get<std::size_t>("n_units", c.n_units);
  c.n_historical = r.Get<std::size_t>("n_historical", c.n_historical);
  c.k_actions = r.Get<int>("k_actions", c.k_actions);
  c.dim_x = r.Get<int>("dim_x", c.dim_x);
  c.dim_s = r.Get<int>("dim_s", c.dim_s);
  c.effect_profile =
      ParseEffectProfile(r.Get<std::string>("effect_profile", std::string(ToString(c.effect_profile))));
  c.min_gap = r.Get<double>("min_gap", c.min_gap);
  c.surrogacy_violation = r.Get<double>("surrogacy_violation", c.surrogacy_violation);
  c.confounder_strength = r.Get<double>("confounder_strength", c.confounder_strength);
  c.comparability_drift = r.Get<double>("comparability_drift", c.comparability_drift);
  c.noise_s = r.Get<double>("noise_s", c.noise_s);
  c.noise_y = r.Get<double>("noise_y", c.noise_y);
  c.design = ParseDesignKind(r.Get<std::string>("design", std::string(ToString(c.design))));
  c.nonlinear_outcome = r.Get<bool>("nonlinear_outcome", c.nonlinear_outcome);
  c.n_periods = r.Get<int>("n_periods", c.n_periods);
  c.discount_periods = r.Get<int>("discount_periods", c.discount_periods);
  c.discount_cost = r.Get<double>("discount_cost", c.discount_cost);
  c.horizon = r.Get<int>("horizon", c.horizon);
  c.surrogate_set =
      ParseSurrogateSet(r.Get<std::string>("surrogate_set", std::string(ToString(c.surrogate_set))));
  c.seed = r.Get<std::uint64_t>("seed", c.seed);
  if (r.Has("coefficient_seed") && !r.Raw("coefficient_seed").is_null()) {
    c.coefficient_seed = r.Get<std::uint64_t>("coefficient_seed", 0);
  }
  r.Finish();
  c.Validate();
  return c;
}

Json ToJson(const DatasetSchema& s) {
  return {{"features", ColumnsToJson(s.features)},
          {"surrogates", ColumnsToJson(s.surrogates)},
          {"n_actions", s.n_actions},
          {"unit_id_column", s.unit_id_column},
          {"action_column", s.action_column},
          {"outcome_column", s.outcome_column}};
}

DatasetSchema DatasetSchemaFromJson(const Json& j) {
  ObjectReader r(j, "schema");
  DatasetSchema s;
  if (r.Has("features")) s.features = ColumnsFromJson(r.Raw("features"), "schema.features");
  if (r.Has("surrogates")) s.surrogates = ColumnsFromJson(r.Raw("surrogates"), "schema.surrogates");
  s.n_actions = r.Get<int>("n_actions", s.n_actions);
  s.unit_id_column = r.Get<std::string>("unit_id_column", s.unit_id_column);
  s.action_column = r.Get<std::string>("action_column", s.action_column);
  s.outcome_column = r.Get<std::string>("outcome_column", s.outcome_column);
  r.Finish();
  if (s.n_actions < 2) throw ArgumentError("schema.n_actions must be >= 2");
  if (s.surrogates.empty()) throw ArgumentError("schema.surrogates must list at least one column");
  return s;
}

DatasetSchema SchemaOf(const ExperimentalDataset& exp) {
  DatasetSchema s;
  s.features = exp.features.Schema();
  s.surrogates = exp.surrogates.Schema();
  s.n_actions = exp.n_actions;
  return s;
}

Json ToJson(const PipelineConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();
  if (c.simulate) {
    j["simulate"] = ToJson(*c.simulate);
  } else {
    j["data"] = {{"historical", c.historical_path.string()},
                 {"experiment", c.experiment_path.string()},
                 {"schema", ToJson(c.schema)}};
  }
  j["surrogate"] = {{"model", ToJson(c.surrogate.spec)},
                    {"candidates", SpecList(c.surrogate.candidates)},
                    {"tuning_folds", c.surrogate.tuning_folds},
                    {"include_covariates", c.surrogate.include_covariates}};
  j["outcome_model"] = {{"model", ToJson(c.policy.outcome_model)},
                        {"n_folds", c.policy.n_folds},
                        {"features", c.policy.outcome_features}};
  j["policy"] = {{"classifier", ToJson(c.policy.classifier)},
                 {"candidates", SpecList(c.classifier_candidates)},
                 {"features", c.policy.policy_features}};
  j["evaluation"] = {{"test_fraction", c.evaluation.test_fraction},
                     {"bootstrap", c.evaluation.bootstrap},
                     {"level", c.evaluation.level},
                     {"estimator", std::string(ToString(c.evaluation.estimator))}};
  j["bts"] = {{"enabled", c.run_bts},
              {"replicates", c.bts.replicates},
              {"floor", c.bts.floor},
              {"ceiling", c.bts.ceiling}};
  return j;
}

PipelineConfig PipelineConfigFromJson(const Json& j, const std::filesystem::path& base_dir) {
  ObjectReader r(j, "config");
  PipelineConfig c;
  c.seed = r.Get<std::uint64_t>("seed", c.seed);
  c.output_dir = Resolve(base_dir, r.Get<std::string>("output_dir", c.output_dir.string()));
  if (r.Has("simulate")) c.simulate = DgpConfigFromJson(r.Raw("simulate"));
  if (r.Has("data")) {
    ObjectReader d(r.Raw("data"), "data");
    c.historical_path = Resolve(base_dir, d.Get<std::string>("historical", ""));
    c.experiment_path = Resolve(base_dir, d.Get<std::string>("experiment", ""));
    if (d.Has("schema")) c.schema = DatasetSchemaFromJson(d.Raw("schema"));
    d.Finish();
  }
  if (r.Has("surrogate")) {
    ObjectReader s(r.Raw("surrogate"), "surrogate");
    if (s.Has("model")) c.surrogate.spec = LearnerSpecFromJson(s.Raw("model"));
    if (s.Has("candidates")) c.surrogate.candidates = SpecListFromJson(s.Raw("candidates"), "surrogate.candidates");
    c.surrogate.tuning_folds = s.Get<int>("tuning_folds", c.surrogate.tuning_folds);
    c.surrogate.include_covariates = s.Get<bool>("include_covariates", c.surrogate.include_covariates);
    s.Finish();
  }
  if (r.Has("outcome_model")) {
    ObjectReader o(r.Raw("outcome_model"), "outcome_model");
    if (o.Has("model")) c.policy.outcome_model = LearnerSpecFromJson(o.Raw("model"));
    c.policy.n_folds = o.Get<int>("n_folds", c.policy.n_folds);
    c.policy.outcome_features = o.Get<std::vector<std::string>>("features", {});
    o.Finish();
  }
  if (r.Has("policy")) {
    ObjectReader p(r.Raw("policy"), "policy");
    if (p.Has("classifier")) c.policy.classifier = LearnerSpecFromJson(p.Raw("classifier"));
    if (p.Has("candidates")) c.classifier_candidates = SpecListFromJson(p.Raw("candidates"), "policy.candidates");
    c.policy.policy_features = p.Get<std::vector<std::string>>("features", {});
    p.Finish();
  }
  if (r.Has("evaluation")) {
    ObjectReader e(r.Raw("evaluation"), "evaluation");
    c.evaluation.test_fraction = e.Get<double>("test_fraction", c.evaluation.test_fraction);
    c.evaluation.bootstrap = e.Get<int>("bootstrap", c.evaluation.bootstrap);
    c.evaluation.level = e.Get<double>("level", c.evaluation.level);
    c.evaluation.estimator = ParseEstimator(e.Get<std::string>("estimator", "dr"));
    e.Finish();
  }
  if (r.Has("bts")) {
    ObjectReader b(r.Raw("bts"), "bts");
    c.run_bts = b.Get<bool>("enabled", c.run_bts);
    c.bts.replicates = b.Get<int>("replicates", c.bts.replicates);
    c.bts.floor = b.Get<double>("floor", c.bts.floor);
    c.bts.ceiling = b.Get<double>("ceiling", c.bts.ceiling);
    b.Finish();
  }
  r.Finish();
  return c;
}

void PipelineConfig::Validate() const {
  if (simulate) {
    simulate->Validate();
    if (!historical_path.empty() || !experiment_path.empty()) {
      throw ArgumentError("config: give either 'simulate' or 'data', not both");
    }
  } else {
    if (historical_path.empty() || experiment_path.empty()) {
      throw ArgumentError("config: 'data' needs historical and experiment paths (or use 'simulate')");
    }
    if (schema.surrogates.empty()) throw ArgumentError("config: data.schema must list the surrogates");
    for (const auto& p : {historical_path, experiment_path}) {
      if (!std::filesystem::exists(p)) throw DataError("dataset file not found: " + p.string());
    }
  }
  surrogate.spec.Validate();
  for (const auto& s : surrogate.candidates) s.Validate();
  if (surrogate.tuning_folds < 2) throw ArgumentError("config: surrogate.tuning_folds must be >= 2");
  policy.outcome_model.Validate();
  policy.classifier.Validate();
  if (policy.n_folds < 2) throw ArgumentError("config: outcome_model.n_folds must be >= 2");
  const int k = simulate ? simulate->k_actions : schema.n_actions;
  for (const auto& s : classifier_candidates) {
    s.Validate();
    if (k > 2 && s.family != LearnerFamily::kCartTree && s.family != LearnerFamily::kKnn) {
      throw ArgumentError("config: with more than two actions classifier candidates must be cart_tree or knn");
    }
  }
  if (!(evaluation.test_fraction > 0.0 && evaluation.test_fraction < 1.0)) {
    throw ArgumentError("config: evaluation.test_fraction must be in (0, 1)");
  }
  if (evaluation.bootstrap < 1) throw ArgumentError("config: evaluation.bootstrap must be >= 1");
  if (!(evaluation.level > 0.0 && evaluation.level < 1.0)) {
    throw ArgumentError("config: evaluation.level must be in (0, 1)");
  }
  if (run_bts) bts.Validate(k);
  if (output_dir.empty()) throw ArgumentError("config: output_dir is empty");
}

std::string ConfigHash(const PipelineConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fnv1a64(ToJson(config).dump())));
  return buf;
}

Json ToJson(const RunManifest& m) {
  Json artifacts = Json::object();
  for (const auto& [name, path] : m.artifacts) artifacts[name] = path.string();
  Json timings = Json::object();
  for (const auto& [stage, s] : m.timings) timings[stage] = s;
  Json versions = Json::object();
  for (const auto& [k, v] : m.versions) versions[k] = v;
  return {{"config_hash", m.config_hash}, {"seed", m.seed},         {"artifacts", artifacts},
          {"timings", timings},           {"versions", versions}, {"warnings", m.warnings}};
}

Json ToJson(const ValueEstimate& v) {
  Json j;
  j["estimator"] = std::string(ToString(v.estimator));
  j["point"] = v.point;
  j["std_error"] = v.std_error ? Json(*v.std_error) : Json(nullptr);
  j["ci_low"] = v.ci_low ? Json(*v.ci_low) : Json(nullptr);
  j["ci_high"] = v.ci_high ? Json(*v.ci_high) : Json(nullptr);
  j["n_effective"] = v.n_effective;
  j["replicates"] = v.replicates;
  j["dropped_replicates"] = v.dropped_replicates;
  j["warnings"] = v.warnings;
  return j;
}

Json EvaluatePolicyReport(const ExperimentalDataset& exp, std::span<const double> outcomes,
                          const PolicySnapshot& target, const std::string& outcome_name,
                          const LearnerSpec& outcome_model, int n_folds, const EvaluationConfig& config,
                          std::uint64_t seed) {
  const PolicySnapshot baseline = PolicySnapshot::Constant(exp.size(), exp.n_actions, 0);
  std::optional<CrossFitOutcomeModel> mu;
  std::vector<std::string> warnings;
  if (config.estimator == Estimator::kDr) {
    mu = FitCrossFitOutcomeModel(exp, outcomes, outcome_model, n_folds, DeriveSeed(seed, "evaluation-model"));
    warnings = mu->warnings;
  }
  BootstrapConfig boot;
  boot.estimator = config.estimator;
  boot.replicates = config.bootstrap;
  boot.level = config.level;
  boot.seed = DeriveSeed(seed, "bootstrap");
  const Matrix* m = mu ? &mu->predictions : nullptr;
  const auto v_target = BootstrapValue(exp, outcomes, target, m, boot);
  const auto v_base = BootstrapValue(exp, outcomes, baseline, m, boot);
  const auto v_diff = BootstrapValueDifference(exp, outcomes, target, baseline, m, boot);
  std::vector<double> shares(static_cast<std::size_t>(exp.n_actions), 0.0);
  for (std::size_t i = 0; i < target.size(); ++i)
    for (std::size_t a = 0; a < shares.size(); ++a) shares[a] += target.probs(i, a);
  for (auto& s : shares) s /= static_cast<double>(target.size());
  Json j;
  j["estimator"] = std::string(ToString(config.estimator));
  j["n_units"] = exp.size();
  j["outcome"] = outcome_name;
  j["level"] = config.level;
  j["replicates"] = config.bootstrap;
  j["target"] = ToJson(v_target);
  j["baseline"] = ToJson(v_base);
  j["baseline"]["policy"] = "treat_none";
  j["difference"] = ToJson(v_diff);
  j["action_shares"] = shares;
  j["warnings"] = warnings;
  return j;
}

std::vector<double> LoadAlignedOutcomes(const std::filesystem::path& path, const std::string& column,
                                        std::span<const std::int64_t> unit_ids) {
  const auto col = LoadOutcomes(path, column);
  if (col.unit_ids.size() != unit_ids.size()) {
    throw DataError("outcome file '" + path.string() + "' has " + std::to_string(col.unit_ids.size()) +
                    " rows, the experiment has " + std::to_string(unit_ids.size()));
  }
  for (std::size_t i = 0; i < unit_ids.size(); ++i) {
    if (col.unit_ids[i] != unit_ids[i]) {
      throw DataError("outcome file '" + path.string() + "' row " + std::to_string(i + 1) +
                      " has unit_id " + std::to_string(col.unit_ids[i]) + ", expected " +
                      std::to_string(unit_ids[i]));
    }
  }
  return col.values;
}

// ---- Run -----------------------------------------------------------------------------

namespace {

template <typename Fn>
auto Stage(const std::string& name, std::vector<std::pair<std::string, double>>& timings, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&] {
    timings.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  };
  const std::string prefix = "stage '" + name + "': ";
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto out = fn();
      finish();
      return out;
    }
  } catch (const ArgumentError& e) {
    throw ArgumentError(prefix + e.what());
  } catch (const PositivityError& e) {
    throw PositivityError(prefix + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw DataError(prefix + e.what());
  }
}

// Labels / weights used to tune the policy classifier: the best action per
// unit weighted by its margin over the runner-up.
void PolicyTrainingTargets(const DrScoreMatrix& scores, std::vector<int>& labels, std::vector<double>& weights) {
  const std::size_t n = scores.scores.rows();
  const std::size_t k = scores.scores.cols();
  labels.resize(n);
  weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < k; ++a)
      if (scores.scores(i, a) > scores.scores(i, best)) best = a;
    double second = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < k; ++a)
      if (a != best) second = std::max(second, scores.scores(i, a));
    labels[i] = static_cast<int>(best);
    weights[i] = scores.scores(i, best) - second;
  }
}

}  // namespace

RunManifest RunPipeline(const PipelineConfig& config) {
  config.Validate();
  RunManifest manifest;
  manifest.config_hash = ConfigHash(config);
  manifest.seed = config.seed;
  manifest.versions = {{"longhorizon", kLibraryVersion},
                       {"model_format", std::to_string(kModelFormatVersion)},
                       {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  auto& timings = manifest.timings;
  const auto& out = config.output_dir;
  std::filesystem::create_directories(out);
  auto artifact = [&](const std::string& name, const std::filesystem::path& path) {
    manifest.artifacts.emplace_back(name, path);
  };
  const std::uint64_t seed = config.seed;

  HistoricalDataset historical;
  ExperimentalDataset experiment;
  std::optional<SimData> sim;
  Stage("load", timings, [&] {
    if (config.simulate) {
      DgpConfig dgp = *config.simulate;
      dgp.seed = DeriveSeed(seed, "simulate");
      sim = Generate(dgp);
      historical = sim->historical;
      experiment = sim->experiment;
      WriteArtifact(out / "historical.csv", [&](const auto& p) { WriteHistorical(historical, p); });
      WriteArtifact(out / "experiment.csv", [&](const auto& p) { WriteExperimental(experiment, p); });
      WriteArtifact(out / "ground_truth.csv", [&](const auto& p) { WriteGroundTruth(*sim, p); });
      WriteArtifact(out / "experiment_outcomes.csv",
                    [&](const auto& p) { WriteOutcomes(p, experiment.unit_ids, sim->outcomes, "y"); });
      artifact("historical", out / "historical.csv");
      artifact("experiment", out / "experiment.csv");
      artifact("ground_truth", out / "ground_truth.csv");
      artifact("experiment_outcomes", out / "experiment_outcomes.csv");
    } else {
      historical = LoadHistorical(config.historical_path, config.schema);
      experiment = LoadExperimental(config.experiment_path, config.schema);
    }
    CheckSurrogateSchemas(historical, experiment);
  });

  std::vector<double> imputed;
  Stage("surrogate", timings, [&] {
    SurrogateFitOptions fit = config.surrogate;
    fit.seed = DeriveSeed(seed, "surrogate");
    const SurrogateModel model = FitSurrogateIndex(historical, fit);
    for (const auto& w : model.warnings()) manifest.warnings.push_back("surrogate: " + w);
    WriteJsonFile(out / "surrogate_model.json", ToJson(model));
    artifact("surrogate_model", out / "surrogate_model.json");
    imputed = model.Impute(experiment);
    WriteArtifact(out / "imputed.csv",
                  [&](const auto& p) { WriteOutcomes(p, experiment.unit_ids, imputed, "y_tilde"); });
    artifact("imputed", out / "imputed.csv");
  });

  const auto split = SplitTrainTest(experiment.size(), config.evaluation.test_fraction, DeriveSeed(seed, "split"));
  const ExperimentalDataset train = experiment.Subset(split.train);
  const ExperimentalDataset test = experiment.Subset(split.test);
  std::vector<double> imputed_train(split.train.size()), imputed_test(split.test.size());
  for (std::size_t i = 0; i < split.train.size(); ++i) imputed_train[i] = imputed[split.train[i]];
  for (std::size_t i = 0; i < split.test.size(); ++i) imputed_test[i] = imputed[split.test[i]];

  PolicyPipelineConfig pipe = config.policy;
  pipe.seed = DeriveSeed(seed, "policy");
  std::optional<Policy> policy;
  Stage("policy", timings, [&] {
    if (!config.classifier_candidates.empty()) {
      ExperimentalDataset view = train;
      view.features = SelectFeatures(train.features, pipe.outcome_features);
      const auto mu = FitCrossFitOutcomeModel(view, imputed_train, pipe.outcome_model, pipe.n_folds,
                                              DeriveSeed(pipe.seed, "outcome-model"));
      const auto scores = DrScores(train, imputed_train, mu);
      std::vector<int> labels;
      std::vector<double> weights;
      PolicyTrainingTargets(scores, labels, weights);
      const auto sel = SelectClassifierByCv(config.classifier_candidates,
                                            SelectFeatures(train.features, pipe.policy_features), labels,
                                            weights, pipe.n_folds, DeriveSeed(pipe.seed, "classifier-cv"));
      pipe.classifier = sel.best;
    }
    auto result = FitPolicyPipeline(train, imputed_train, pipe);
    for (const auto& w : result.fit.warnings) manifest.warnings.push_back("policy: " + w);
    WriteJsonFile(out / "policy.json", ToJson(result.fit.policy));
    artifact("policy", out / "policy.json");
    policy = std::move(result.fit.policy);
  });

  Stage("evaluate", timings, [&] {
    const Table test_features = SelectFeatures(test.features, pipe.policy_features);
    const PolicySnapshot target = policy->Assign(test_features);
    Json report = EvaluatePolicyReport(test, imputed_test, target, "y_tilde", pipe.outcome_model, pipe.n_folds,
                                       config.evaluation, seed);
    report["policy"] = "learned";
    report["split"] = {{"test_fraction", config.evaluation.test_fraction},
                       {"n_train", split.train.size()},
                       {"n_test", split.test.size()}};
    if (sim) {
      // Simulator runs also carry the true values of both policies on the test units.
      double v_target = 0.0, v_base = 0.0;
      for (std::size_t r = 0; r < split.test.size(); ++r) {
        const std::size_t i = split.test[r];
        for (std::size_t a = 0; a < target.probs.cols(); ++a) v_target += target.probs(r, a) * sim->potential_outcomes(i, a);
        v_base += sim->potential_outcomes(i, 0);
      }
      const double n = static_cast<double>(split.test.size());
      report["true_values"] = {{"target", v_target / n}, {"baseline", v_base / n},
                               {"difference", (v_target - v_base) / n}};
    }
    WriteJsonFile(out / "evaluation.json", report);
    artifact("evaluation", out / "evaluation.json");
  });

  if (config.run_bts) {
    Stage("bts", timings, [&] {
      BtsConfig bts = config.bts;
      bts.seed = DeriveSeed(seed, "bts");
      const BtsResult result = BootstrapThompson(experiment, imputed, pipe, bts);
      for (const auto& w : result.warnings) manifest.warnings.push_back("bts: " + w);
      const std::uint64_t draw_seed = DeriveSeed(seed, "assignment");
      const auto sampled = SampleActions(result.snapshot, draw_seed);
      WriteArtifact(out / "bts_assignment.csv", [&](const auto& p) {
        WriteAssignment(p, experiment.unit_ids, result.snapshot, sampled, draw_seed);
      });
      artifact("bts_assignment", out / "bts_assignment.csv");
    });
  }

  WriteJsonFile(out / "manifest.json", ToJson(manifest));
  return manifest;
}

}  // namespace longhorizon
