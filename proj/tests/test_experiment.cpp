// Copyright 2026 The dmace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "dmace/experiment.hpp"
#include "test_support.hpp"

namespace dmace {
namespace {

const std::string kFixtures = DMACE_FIXTURES;

TEST(DeriveSeed, DeterministicAndCoordinateSensitive) {
  EXPECT_EQ(derive_seed(5, {1, 2}), derive_seed(5, {1, 2}));
  EXPECT_NE(derive_seed(5, {1, 2}), derive_seed(5, {2, 1}));
  EXPECT_NE(derive_seed(5, {1}), derive_seed(6, {1}));
}

TEST(Variant, ParseAndName) {
  EXPECT_EQ(parse_variant("1-nomc"), (Variant{ProblemType::type1, true}));
  EXPECT_EQ(parse_variant("rbf"), (Variant{ProblemType::rbf, false}));
  EXPECT_EQ(variant_name({ProblemType::type3, true}), "3-nomc");
  EXPECT_THROW(parse_variant("7"), ArgumentError);
}

DatasetRequest request(double coupling, std::optional<double> snr, Index k_train) {
  DatasetRequest req;
  req.scenario.n_f = 2;
  req.scenario.n_m = 6;
  req.scenario.n_u = 3;
  req.scenario.coupling_strength = coupling;
  req.scenario.snr_db = snr;
  req.scenario.seed = 4;
  req.k_train = k_train;
  req.q_test = 50;
  return req;
}

TEST(Dataset, KnownChannelsRespectProblemType) {
  auto ds = make_dataset(request(0.8, std::nullopt, 20));
  EXPECT_FALSE(known_channels(ds, ProblemType::type1).H0);
  EXPECT_FALSE(known_channels(ds, ProblemType::type1).B);
  EXPECT_TRUE(known_channels(ds, ProblemType::type2).H0);
  EXPECT_FALSE(known_channels(ds, ProblemType::type2).B);
  EXPECT_TRUE(known_channels(ds, ProblemType::type4).B);
  EXPECT_EQ(*known_channels(ds, ProblemType::type4).H0, ds.ground_truth->H0);
  ds.feed_channel.reset();
  EXPECT_THROW(known_channels(ds, ProblemType::type3), MissingInputError);
  auto req = request(0.8, std::nullopt, 20);
  req.scenario.alpha = Complex(0.2, 0.0);
  EXPECT_THROW(known_channels(make_dataset(req), ProblemType::rbf), MissingInputError);
}

TEST(Pipeline, NoiselessRecoveryForEveryType) {
  const auto ds = make_dataset(request(0.8, std::nullopt, 60));
  for (auto t : {ProblemType::type1, ProblemType::type2, ProblemType::type3, ProblemType::type4}) {
    const auto est = run_estimation({t, false}, train_tensor(ds, 40), train_configs(ds, 40), ds.hardware,
                                    known_channels(ds, t), EstimatorConfig{});
    EXPECT_LE(nmse(test_tensor(ds), predict_channels(est, test_configs(ds))), 1e-14) << to_string(t);
  }
}

TEST(Pipeline, NoMcMatchesAtZeroCoupling) {
  const auto ds = make_dataset(request(0.0, 40.0, 30));
  EstimatorConfig cfg;
  cfg.init_seed = 3;
  for (auto t : {ProblemType::type1, ProblemType::type3}) {
    const auto a = run_estimation({t, false}, train_tensor(ds, 30), train_configs(ds, 30), ds.hardware,
                                  known_channels(ds, t), cfg);
    const auto b = run_estimation({t, true}, train_tensor(ds, 30), train_configs(ds, 30), ds.hardware,
                                  known_channels(ds, t), cfg);
    EXPECT_EQ(predict_channels(a, test_configs(ds)), predict_channels(b, test_configs(ds)));
  }
}

TEST(Pipeline, TooFewConfigurationsIsIdentifiabilityError) {
  const auto ds = make_dataset(request(0.8, std::nullopt, 20));
  EXPECT_THROW(run_estimation({ProblemType::rbf, false}, train_tensor(ds, 20), train_configs(ds, 20), ds.hardware,
                              known_channels(ds, ProblemType::rbf), EstimatorConfig{}),
               IdentifiabilityError);
}

TEST(ModelGain, MatchesPrediction) {
  const auto ds = make_dataset(request(0.8, std::nullopt, 10));
  const auto& p = *ds.ground_truth;
  const ChannelModel m{p.H0, p.A, p.B};
  for (const auto& v : test_configs(ds)) EXPECT_NEAR(model_gain(m, ds.hardware, v, 2, 1), std::norm(end_to_end(p, v)(2, 1)), 1e-12);
  EXPECT_THROW(model_gain(m, ds.hardware, test_configs(ds).front(), 3, 0), ArgumentError);
}

TEST(Config, ParsesFixture) {
  const auto cfg = experiment_from_json(read_json_file(kFixtures + "/sweep_small.json"));
  EXPECT_EQ(cfg.variants.size(), 4U);
  EXPECT_TRUE(cfg.variants[1].no_mc);
  EXPECT_EQ(cfg.k_grid, (std::vector<Index>{4, 10, 20}));
  EXPECT_EQ(cfg.n_f_grid, (std::vector<Index>{1, 2}));
  EXPECT_EQ(cfg.q_test, 30);
  EXPECT_EQ(cfg.estimator.starts, 2);
  ASSERT_TRUE(cfg.scenario.snr_db);
  EXPECT_EQ(*cfg.scenario.snr_db, 40.0);
}

TEST(Config, Errors) {
  try {
    experiment_from_json(read_json_file(kFixtures + "/missing_field.json"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("n_m"), std::string::npos);
  }
  EXPECT_THROW(experiment_from_json(read_json_file(kFixtures + "/bad_version.json")), VersionError);
  EXPECT_THROW(experiment_from_json(read_json_file(kFixtures + "/sweep_empty_grid.json")), ParseError);
  EXPECT_THROW(read_json_file(kFixtures + "/nonexistent.json"), ArgumentError);
}

ExperimentConfig small_sweep() {
  ExperimentConfig cfg;
  cfg.scenario.n_f = 2;
  cfg.scenario.n_m = 6;
  cfg.scenario.n_u = 3;
  cfg.scenario.coupling_strength = 0.8;
  cfg.scenario.snr_db = 40.0;
  cfg.variants = {{ProblemType::type3, false}, {ProblemType::rbf, false}, {ProblemType::type1, true}};
  cfg.k_grid = {5, 60};  // 60 draws: RBF needs 21 distinct loads at N_M = 6
  cfg.n_f_grid = {2};
  cfg.q_test = 20;
  cfg.seeds = {1, 2};
  cfg.estimator.starts = 1;
  return cfg;
}

TEST(Sweep, RowsAndFailureStatus) {
  const auto rows = run_sweep(small_sweep());
  ASSERT_EQ(rows.size(), 12U);
  for (const auto& r : rows) {
    EXPECT_EQ(r.wall_time_ms, 0.0);
    if (r.type == "rbf" && r.k == 5) {
      EXPECT_EQ(r.status, "identifiability");
      EXPECT_TRUE(std::isnan(r.zeta_db));
    } else if (r.k == 60) {
      EXPECT_EQ(r.status, "ok") << r.type;
      EXPECT_TRUE(std::isfinite(r.zeta_db));
    }
  }
}

TEST(Sweep, DeterministicAcrossJobCounts) {
  const auto a = run_sweep(small_sweep(), {1, false});
  const auto b = run_sweep(small_sweep(), {3, false});
  std::ostringstream sa, sb;
  write_sweep_csv(sa, a);
  write_sweep_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Csv, RoundTrip) {
  std::vector<SweepRow> rows(2);
  rows[0] = {"1", 2, 10, 7, -20.5, 19.25, 12, 0.0, true, "ok"};
  rows[1] = {"rbf", 1, 3, 8, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity(), 0,
             1.5, false, "weird,\"status\""};
  std::ostringstream os;
  write_sweep_csv(os, rows);
  std::istringstream is(os.str());
  const auto back = read_sweep_csv(is);
  ASSERT_EQ(back.size(), 2U);
  EXPECT_EQ(back[0].type, "1");
  EXPECT_EQ(back[0].zeta_db, 19.25);
  EXPECT_TRUE(back[0].converged);
  EXPECT_TRUE(std::isnan(back[1].nmse_db));
  EXPECT_TRUE(std::isinf(back[1].zeta_db));
  EXPECT_EQ(back[1].status, "weird,\"status\"");
  EXPECT_EQ(back[1].seed, 8U);
}

TEST(Csv, MissingColumnAndBadValues) {
  std::ifstream f(kFixtures + "/sweep_missing_status.csv");
  EXPECT_THROW(read_sweep_csv(f), ParseError);
  std::istringstream bad(std::string(kSweepHeader) + "\n1,2,x,1,0,0,0,0,true,ok\n");
  EXPECT_THROW(read_sweep_csv(bad), ParseError);
  std::istringstream empty("");
  EXPECT_THROW(read_sweep_csv(empty), ParseError);
}

TEST(Summary, FiveRowFixtureByHand) {
  std::ifstream f(kFixtures + "/sweep_5rows.csv");
  const auto rows = read_sweep_csv(f);
  ASSERT_EQ(rows.size(), 5U);
  // threshold 40 - 3 = 37: type 1 never reaches it, type 3 does at K = 10
  const auto s = summarize(rows, 37.0);
  ASSERT_EQ(s.size(), 2U);
  EXPECT_EQ(s[0].type, "1");
  EXPECT_FALSE(s[0].k_at_threshold);
  EXPECT_EQ(s[0].best_k, 40);
  EXPECT_EQ(s[0].best_zeta_db, 36.0);
  ASSERT_EQ(s[0].points.size(), 4U);
  EXPECT_EQ(s[0].points[0].k, 5);
  EXPECT_EQ(s[0].points[0].failed, 1);
  ASSERT_TRUE(s[1].k_at_threshold);
  EXPECT_EQ(*s[1].k_at_threshold, 10);
  // threshold 30: first K with zeta >= 30 is 20 (30.5)
  EXPECT_EQ(*summarize(rows, 30.0)[0].k_at_threshold, 20);
  // own-best rule: 36 - 3 = 33, reached at K = 40
  EXPECT_EQ(*summarize(rows, std::nullopt)[0].k_at_threshold, 40);
}

TEST(Summary, SingleRow) {
  std::ifstream f(kFixtures + "/sweep_single.csv");
  const auto s = summarize(read_sweep_csv(f), std::nullopt);
  ASSERT_EQ(s.size(), 1U);
  ASSERT_EQ(s[0].points.size(), 1U);
  EXPECT_EQ(*s[0].k_at_threshold, 12);
  EXPECT_EQ(summary_to_json(s).size(), 1U);
  EXPECT_NE(summary_table(s).find("24.00"), std::string::npos);
}

}  // namespace
}  // namespace dmace
