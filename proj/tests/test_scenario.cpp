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

#include <cmath>
#include <filesystem>
#include <random>

#include "dmace/experiment.hpp"
#include "dmace/scenario.hpp"
#include "test_support.hpp"

namespace dmace {
namespace {

ScenarioSpec small_spec(double coupling, std::uint64_t seed = 3) {
  ScenarioSpec s;
  s.n_f = 2;
  s.n_m = 8;
  s.n_u = 3;
  s.coupling_strength = coupling;
  s.seed = seed;
  return s;
}

TEST(GenerateParams, ZeroCouplingGivesZeroGamma) {
  const auto p = generate_params(small_spec(0.0));
  EXPECT_TRUE(p.Gamma.isZero(0.0));
  EXPECT_EQ(p.Gamma.rows(), 8);
}

TEST(GenerateParams, DeterministicInSeed) {
  const auto a = generate_params(small_spec(0.5, 11));
  const auto b = generate_params(small_spec(0.5, 11));
  EXPECT_EQ(a.H0, b.H0);
  EXPECT_EQ(a.A, b.A);
  EXPECT_EQ(a.B, b.B);
  EXPECT_EQ(a.Gamma, b.Gamma);
  const auto c = generate_params(small_spec(0.5, 12));
  EXPECT_NE(a.A, c.A);
}

TEST(GenerateParams, CouplingStrengthIsSpectralNorm) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto spec = small_spec(0.8, seed);
    spec.alpha = Complex(0.6, 0.8);  // |alpha| = |beta| = 1
    const auto p = generate_params(spec);
    Eigen::BDCSVD<ComplexMatrix> svd(p.Gamma);
    EXPECT_NEAR(svd.singularValues()(0), 0.8, 1e-12);
    EXPECT_LE((p.Gamma - p.Gamma.transpose()).norm(), 1e-12 * p.Gamma.norm());
    EXPECT_NO_THROW(p.validate());
  }
}

TEST(GenerateParams, RejectsInvalidSpec) {
  auto s = small_spec(1.0);
  EXPECT_THROW(generate_params(s), ArgumentError);
  s = small_spec(0.5);
  s.n_m = 0;
  EXPECT_THROW(generate_params(s), ArgumentError);
}

TEST(GenerateParams, EveryConfigurationIsAdmissible) {
  const auto p = generate_params(small_spec(0.95, 5));
  for (const auto& v : sample_configs(8, 1000, 9)) EXPECT_NO_THROW(end_to_end(p, v));
  EXPECT_NO_THROW(check_admissible(p.hardware()));
}

TEST(SampleConfigs, ReferenceComesFirst) {
  const auto one = sample_configs(6, 1, 4, true);
  ASSERT_EQ(one.size(), 1U);
  EXPECT_EQ(one[0], DmaConfiguration::zeros(6));
  const auto many = sample_configs(6, 5, 4, true);
  ASSERT_EQ(many.size(), 5U);
  EXPECT_EQ(many[0], DmaConfiguration::zeros(6));
}

TEST(SampleConfigs, DeterministicAndValidated) {
  EXPECT_EQ(sample_configs(10, 20, 77), sample_configs(10, 20, 77));
  EXPECT_NE(sample_configs(10, 20, 77), sample_configs(10, 20, 78));
  EXPECT_THROW(sample_configs(10, 0, 1), ArgumentError);
}

TEST(SampleConfigs, FairCoinBits) {
  const auto configs = sample_configs(16, 10000, 123);
  double ones = 0.0;
  for (const auto& v : configs)
    for (Index i = 0; i < v.size(); ++i) ones += v[i] ? 1.0 : 0.0;
  const double mean = ones / (16.0 * 10000.0);
  // the standard error is 0.5 / sqrt(160000) = 0.00125, so 0.02 is 16 sigma
  EXPECT_NEAR(mean, 0.5, 0.02);
}

TEST(Measure, NoiselessEqualsForwardModel) {
  const auto p = generate_params(small_spec(0.8));
  const auto configs = sample_configs(8, 12, 2);
  const auto ms = measure(p, configs, std::nullopt, 5);
  ASSERT_EQ(ms.k(), 12);
  for (Index k = 0; k < 12; ++k)
    EXPECT_EQ(ComplexMatrix(ms.H_meas.slice(k)), end_to_end(p, configs[static_cast<std::size_t>(k)]));
}

TEST(Measure, RealizedSnrMatchesRequest) {
  ScenarioSpec s = small_spec(0.5);
  s.n_u = 10;
  s.n_f = 10;
  const auto p = generate_params(s);
  const auto configs = sample_configs(8, 100, 6);  // 10^4 scalar samples
  const Tensor3 clean = forward_tensor(p, configs);
  for (double snr : {0.0, 20.0}) {
    const auto ms = measure(p, configs, snr, 17);
    const double noise = (ms.H_meas - clean).squared_norm();
    EXPECT_NEAR(10.0 * std::log10(clean.squared_norm() / noise), snr, 0.5);
  }
}

TEST(Measure, DeterministicInSeeds) {
  const auto p = generate_params(small_spec(0.8));
  const auto configs = sample_configs(8, 10, 2);
  EXPECT_EQ(measure(p, configs, 30.0, 8).H_meas, measure(p, configs, 30.0, 8).H_meas);
  EXPECT_NE(measure(p, configs, 30.0, 8).H_meas, measure(p, configs, 30.0, 9).H_meas);
}

TEST(Measure, SingularityNamesConfiguration) {
  SystemParameters p;
  p.H0 = ComplexMatrix::Zero(1, 1);
  p.A = ComplexMatrix::Ones(1, 2);
  p.B = ComplexMatrix::Ones(2, 1);
  p.Gamma = (ComplexMatrix(2, 2) << 0.0, 1.0, 1.0, 0.0).finished();
  const std::vector<DmaConfiguration> configs{DmaConfiguration::from_string("10"), DmaConfiguration::from_string("11")};
  try {
    measure(p, configs, std::nullopt, 0);
    FAIL() << "expected SingularityError";
  } catch (const SingularityError& e) {
    EXPECT_EQ(e.config_index(), 1);
  }
}

Dataset sample_dataset(bool ground_truth) {
  DatasetRequest req;
  req.scenario = small_spec(0.8);
  req.scenario.snr_db = 30.0;
  req.scenario.alpha = Complex(0.0, 0.0);
  req.k_train = 10;
  req.q_test = 4;
  req.ground_truth = ground_truth;
  return make_dataset(req);
}

TEST(DatasetFile, RoundTripIsBitExact) {
  const auto ds = sample_dataset(true);
  const auto path = (std::filesystem::temp_directory_path() / "dmace_scenario_roundtrip.json").string();
  save_dataset(ds, path);
  const auto back = load_dataset(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.measurements.H_meas, ds.measurements.H_meas);
  EXPECT_EQ(back.measurements.configs, ds.measurements.configs);
  EXPECT_EQ(back.hardware.Gamma, ds.hardware.Gamma);
  EXPECT_EQ(back.hardware.alpha, ds.hardware.alpha);
  EXPECT_EQ(back.hardware.beta, ds.hardware.beta);
  EXPECT_EQ(*back.feed_channel, *ds.feed_channel);
  EXPECT_EQ(back.measurements.snr_db, ds.measurements.snr_db);
  EXPECT_EQ(back.seeds.noise, ds.seeds.noise);
  EXPECT_EQ(back.layout.n_train, 10);
  EXPECT_EQ(back.layout.n_test, 4);
  EXPECT_TRUE(back.layout.reference);
  ASSERT_TRUE(back.ground_truth);
  EXPECT_EQ(back.ground_truth->A, ds.ground_truth->A);
  EXPECT_EQ(back.ground_truth->H0, ds.ground_truth->H0);
}

TEST(DatasetFile, WithoutGroundTruth) {
  const auto ds = sample_dataset(false);
  const auto back = parse_dataset(dataset_to_json(ds).dump());
  EXPECT_FALSE(back.ground_truth.has_value());
  EXPECT_EQ(back.measurements.H_meas, ds.measurements.H_meas);
}

TEST(DatasetFile, TruncatedFileIsParseError) {
  const std::string text = dataset_to_json(sample_dataset(false)).dump();
  try {
    parse_dataset(text.substr(0, text.size() / 2));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.byte_offset(), 0U);
  }
}

TEST(DatasetFile, VersionMismatch) {
  auto j = dataset_to_json(sample_dataset(false));
  j["version"] = 99;
  try {
    parse_dataset(j.dump());
    FAIL() << "expected VersionError";
  } catch (const VersionError& e) {
    EXPECT_EQ(e.found(), 99);
    EXPECT_EQ(e.expected(), kDatasetVersion);
  }
}

TEST(DatasetFile, StructuralErrors) {
  auto j = dataset_to_json(sample_dataset(false));
  j["H_meas"].erase(0);
  EXPECT_THROW(parse_dataset(j.dump()), ParseError);
  auto k = dataset_to_json(sample_dataset(false));
  k.erase("dims");
  EXPECT_THROW(parse_dataset(k.dump()), ParseError);
  EXPECT_THROW(load_dataset("/nonexistent/dmace.json"), ArgumentError);
}

TEST(Dataset, ViewsFollowLayout) {
  const auto ds = sample_dataset(true);
  EXPECT_EQ(ds.measurements.k(), 15);
  EXPECT_EQ(train_tensor(ds, 10).dim3(), 10);
  EXPECT_EQ(test_tensor(ds).dim3(), 4);
  EXPECT_EQ(train_configs(ds, 3).size(), 3U);
  EXPECT_EQ(ComplexMatrix(train_tensor(ds, 2).slice(0)), ComplexMatrix(ds.measurements.H_meas.slice(1)));
  EXPECT_EQ(test_configs(ds).front(), ds.measurements.configs[11]);
  ASSERT_TRUE(reference_h0(ds));
  EXPECT_EQ(*reference_h0(ds), ComplexMatrix(ds.measurements.H_meas.slice(0)));
}

}  // namespace
}  // namespace dmace
