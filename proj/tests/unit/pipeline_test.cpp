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


#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "longhorizon/error.hpp"
#include "longhorizon/pipeline.hpp"
#include "longhorizon/rng.hpp"

namespace longhorizon {
namespace {

namespace fs = std::filesystem;

fs::path Fresh(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lh_pipeline_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PipelineConfig SmallSimConfig(const fs::path& out) {
  PipelineConfig cfg;
  DgpConfig dgp;
  dgp.n_units = 600;
  dgp.n_historical = 600;
  cfg.simulate = dgp;
  cfg.evaluation.bootstrap = 50;
  cfg.bts.replicates = 5;
  cfg.bts.floor = 0.05;
  cfg.bts.ceiling = 0.95;
  cfg.output_dir = out;
  cfg.seed = 2026;
  return cfg;
}

TEST(Config, JsonRoundTrip) {
  PipelineConfig cfg = SmallSimConfig("out");
  cfg.simulate->coefficient_seed = 9;
  cfg.simulate->family = DgpFamily::kSubscriber;
  cfg.surrogate.candidates = {LearnerSpec::Ridge(0.1), LearnerSpec::Cart(3)};
  cfg.policy.classifier = LearnerSpec::Knn(7);
  cfg.policy.policy_features = {"x0", "x1"};
  cfg.evaluation.estimator = Estimator::kHajek;
  cfg.run_bts = false;
  const Json j = ToJson(cfg);
  const PipelineConfig back = PipelineConfigFromJson(j);
  EXPECT_EQ(ToJson(back).dump(), j.dump());
  EXPECT_EQ(ConfigHash(back), ConfigHash(cfg));
  EXPECT_EQ(ConfigHash(cfg).size(), 16u);
  cfg.seed += 1;
  EXPECT_NE(ConfigHash(cfg), ConfigHash(back));
}

TEST(Config, FileBasedRoundTripResolvesRelativePaths) {
  PipelineConfig cfg;
  cfg.historical_path = "hist.csv";
  cfg.experiment_path = "exp.csv";
  cfg.schema.features = {{"x0", ColumnKind::kFloat}, {"segment", ColumnKind::kCategorical}};
  cfg.schema.surrogates = {{"s0", ColumnKind::kFloat}};
  const auto back = PipelineConfigFromJson(ToJson(cfg), "/data");
  EXPECT_EQ(back.historical_path, fs::path("/data/hist.csv"));
  EXPECT_EQ(back.schema.features, cfg.schema.features);
  EXPECT_FALSE(back.simulate.has_value());
}

TEST(Config, UnknownKeysRejected) {
  Json j = ToJson(SmallSimConfig("out"));
  j["sed"] = 1;
  EXPECT_THROW(PipelineConfigFromJson(j), ArgumentError);
  Json nested = ToJson(SmallSimConfig("out"));
  nested["evaluation"]["bootstraps"] = 10;
  try {
    PipelineConfigFromJson(nested);
    FAIL();
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("bootstraps"), std::string::npos) << e.what();
  }
}

TEST(Config, InvalidValues) {
  PipelineConfig cfg = SmallSimConfig("out");
  cfg.evaluation.test_fraction = 1.5;
  EXPECT_THROW(cfg.Validate(), ArgumentError);
  cfg = SmallSimConfig("out");
  cfg.simulate->k_actions = 1;
  EXPECT_THROW(cfg.Validate(), ArgumentError);
  cfg = SmallSimConfig("out");
  cfg.simulate->k_actions = 3;
  cfg.classifier_candidates = {LearnerSpec::Logistic()};
  EXPECT_THROW(cfg.Validate(), ArgumentError);
}

TEST(Run, MissingDatasetFailsBeforeAnyOutput) {
  const fs::path out = Fresh("missing");
  PipelineConfig cfg;
  cfg.historical_path = out.parent_path() / "lh_no_such_history.csv";
  cfg.experiment_path = out.parent_path() / "lh_no_such_experiment.csv";
  cfg.schema.features = {{"x0", ColumnKind::kFloat}};
  cfg.schema.surrogates = {{"s0", ColumnKind::kFloat}};
  cfg.output_dir = out;
  try {
    RunPipeline(cfg);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("lh_no_such_history.csv"), std::string::npos) << e.what();
  }
  EXPECT_FALSE(fs::exists(out));
}

TEST(Run, StageErrorsNameTheStage) {
  const fs::path dir = Fresh("bad_rows");
  fs::create_directories(dir);
  std::ofstream(dir / "h.csv") << "x0,s0,y\n1,2,3\n2,3,4\n";
  std::ofstream(dir / "e.csv") << "x0,action,s0,p0,p1\n1,0,2,0.5,0.5\n2,1,abc,0.5,0.5\n";
  PipelineConfig cfg;
  cfg.historical_path = dir / "h.csv";
  cfg.experiment_path = dir / "e.csv";
  cfg.schema.features = {{"x0", ColumnKind::kFloat}};
  cfg.schema.surrogates = {{"s0", ColumnKind::kFloat}};
  cfg.output_dir = dir / "out";
  try {
    RunPipeline(cfg);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_EQ(msg.rfind("stage 'load'", 0), 0u) << msg;
    EXPECT_NE(msg.find("s0"), std::string::npos) << msg;
  }
}

class SimulatedRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    first_ = Fresh("run_a");
    second_ = Fresh("run_b");
    manifest_ = RunPipeline(SmallSimConfig(first_));
    RunPipeline(SmallSimConfig(second_));
  }
  static fs::path first_, second_;
  static RunManifest manifest_;
};

fs::path SimulatedRun::first_;
fs::path SimulatedRun::second_;
RunManifest SimulatedRun::manifest_;

TEST_F(SimulatedRun, WritesEveryArtifact) {
  for (const char* name : {"historical.csv", "experiment.csv", "ground_truth.csv", "experiment_outcomes.csv",
                           "surrogate_model.json", "imputed.csv", "policy.json", "evaluation.json",
                           "bts_assignment.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(first_ / name)) << name;
    EXPECT_FALSE(fs::exists(first_ / (std::string(name) + ".partial"))) << name;
  }
  const Json m = ReadJsonFile(first_ / "manifest.json");
  EXPECT_EQ(m["config_hash"], manifest_.config_hash);
  EXPECT_EQ(m["seed"], 2026);
}

TEST_F(SimulatedRun, ReRunsAreByteIdentical) {
  for (const char* name : {"evaluation.json", "imputed.csv", "policy.json", "bts_assignment.csv",
                           "surrogate_model.json", "experiment.csv"}) {
    EXPECT_EQ(Slurp(first_ / name), Slurp(second_ / name)) << name;
  }
}

TEST_F(SimulatedRun, ImputedFileMatchesReloadedModel) {
  const auto model = SurrogateModelFromJson(ReadJsonFile(first_ / "surrogate_model.json"));
  const auto cfg = SmallSimConfig(first_);
  DgpConfig dgp = *cfg.simulate;
  dgp.seed = DeriveSeed(cfg.seed, "simulate");
  const SimData sim = Generate(dgp);
  const auto exp = LoadExperimental(first_ / "experiment.csv", SchemaOf(sim.experiment));
  const auto from_file = LoadAlignedOutcomes(first_ / "imputed.csv", "y_tilde", exp.unit_ids);
  EXPECT_EQ(from_file, model.Impute(exp));
  SurrogateFitOptions fit = cfg.surrogate;
  fit.seed = DeriveSeed(cfg.seed, "surrogate");
  EXPECT_EQ(from_file, FitSurrogateIndex(sim.historical, fit).Impute(sim.experiment));
}

TEST_F(SimulatedRun, EvaluationReportShape) {
  const Json e = ReadJsonFile(first_ / "evaluation.json");
  for (const char* key : {"estimator", "n_units", "target", "baseline", "difference", "action_shares", "split",
                          "true_values"}) {
    EXPECT_TRUE(e.contains(key)) << key;
  }
  EXPECT_EQ(e["split"]["n_test"], 120);
  const double lo = e["difference"]["ci_low"], hi = e["difference"]["ci_high"], pt = e["difference"]["point"];
  EXPECT_LE(lo, pt);
  EXPECT_GE(hi, pt);
}

TEST(AlignedOutcomes, RejectsReorderedIds) {
  const fs::path dir = Fresh("aligned");
  fs::create_directories(dir);
  std::ofstream(dir / "o.csv") << "unit_id,y\n2,1.5\n1,2.5\n";
  const std::vector<std::int64_t> ids{1, 2};
  EXPECT_THROW(LoadAlignedOutcomes(dir / "o.csv", "y", ids), DataError);
  const std::vector<std::int64_t> swapped{2, 1};
  EXPECT_EQ(LoadAlignedOutcomes(dir / "o.csv", "y", swapped), (std::vector<double>{1.5, 2.5}));
}

}  // namespace
}  // namespace longhorizon
