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

#include <random>

#include "dmace/experiment.hpp"
#include "dmace/optimizer.hpp"
#include "dmace/scenario.hpp"
#include "test_support.hpp"

namespace dmace {
namespace {

SystemParameters dma(Index n_m, std::uint64_t seed, double coupling = 0.8) {
  ScenarioSpec s;
  s.n_f = 1;
  s.n_m = n_m;
  s.n_u = 1;
  s.coupling_strength = coupling;
  s.seed = seed;
  return generate_params(s);
}

DmaConfiguration from_index(unsigned code, Index n) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((code >> i) & 1U);
  return DmaConfiguration(bits);
}

double exhaustive_max(const SystemParameters& p) {
  double best = 0.0;
  for (unsigned c = 0; c < (1U << p.n_m()); ++c) best = std::max(best, channel_gain(p, from_index(c, p.n_m()), 0, 0));
  return best;
}

TEST(ChannelGain, NoMetasurfaceChannel) {
  auto p = dma(6, 1);
  p.A.setZero();
  const double want = std::norm(p.H0(0, 0));
  for (unsigned c : {0U, 5U, 63U}) EXPECT_EQ(channel_gain(p, from_index(c, 6), 0, 0), want);
}

TEST(ChannelGain, MatchesForwardModelEntry) {
  ScenarioSpec s;
  s.n_f = 2;
  s.n_m = 5;
  s.n_u = 3;
  s.coupling_strength = 0.7;
  s.seed = 2;
  const auto p = generate_params(s);
  for (unsigned c = 0; c < 32; ++c) {
    const auto v = from_index(c, 5);
    const ComplexMatrix h = end_to_end(p, v);
    EXPECT_EQ(channel_gain(p, v, 2, 1), std::norm(h(2, 1)));
  }
  EXPECT_THROW(channel_gain(p, from_index(0, 5), 3, 0), ArgumentError);
  EXPECT_THROW(channel_gain(p, from_index(0, 5), 0, 2), ArgumentError);
}

TEST(ChannelGain, InvariantUnderScalarAmbiguity) {
  const auto p = dma(6, 3);
  const ChannelModel m{p.H0, p.A, p.B};
  const Complex g(-0.4, 2.2);
  const ChannelModel scaled{p.H0, g * p.A, p.B / g};
  for (unsigned c = 0; c < 64; c += 7) {
    const auto v = from_index(c, 6);
    const double ref = model_gain(m, p.hardware(), v, 0, 0);
    EXPECT_NEAR(model_gain(scaled, p.hardware(), v, 0, 0), ref, 1e-12 * ref);
    EXPECT_NEAR(ref, channel_gain(p, v, 0, 0), 1e-12 * ref);
  }
}

TEST(Genetic, SeparableFitnessReachesAllOnes) {
  for (Index n : {4, 10, 16}) {
    GaConfig cfg;
    cfg.max_generations = 100;
    cfg.seed = 3;
    const auto res = genetic_optimize(
        [](const DmaConfiguration& v) {
          double s = 0.0;
          for (Index i = 0; i < v.size(); ++i) s += v[i] ? 1.0 : 0.0;
          return s;
        },
        n, cfg);
    EXPECT_EQ(res.best_v, DmaConfiguration::ones(n));
    EXPECT_EQ(res.best_gain, static_cast<double>(n));
    EXPECT_LE(res.generations_used, 100);
  }
}

TEST(Genetic, SingleElementFoundInFirstGeneration) {
  GaConfig cfg;
  cfg.population = 2;
  cfg.baseline_samples = 1;
  cfg.seed = 4;
  const auto res = genetic_optimize([](const DmaConfiguration& v) { return v[0] ? 2.0 : 1.0; }, 1, cfg);
  EXPECT_EQ(res.best_v, DmaConfiguration::ones(1));
  ASSERT_GE(res.gain_trace.size(), 2U);
  EXPECT_EQ(res.gain_trace[1], 2.0);
}

TEST(Genetic, MatchesExhaustiveOptimumAndBaseline) {
  const auto p = dma(12, 5);
  const double opt = exhaustive_max(p);
  GaConfig cfg;
  cfg.seed = 6;
  const auto res = genetic_optimize([&](const DmaConfiguration& v) { return channel_gain(p, v, 0, 0); }, 12, cfg);
  EXPECT_GE(res.best_gain, res.random_baseline.max);
  // 200 individuals over up to 1200 generations cover 4096 configurations many times over
  EXPECT_GE(res.best_gain, opt * (1.0 - 1e-12));
  EXPECT_EQ(res.best_gain, channel_gain(p, res.best_v, 0, 0));
}

TEST(Genetic, ElitismDeterminismAndEnhancement) {
  const auto p = dma(10, 7);
  auto fit = [&](const DmaConfiguration& v) { return channel_gain(p, v, 0, 0); };
  GaConfig cfg;
  cfg.seed = 8;
  cfg.population = 30;
  const auto a = genetic_optimize(fit, 10, cfg);
  const auto b = genetic_optimize(fit, 10, cfg);
  EXPECT_EQ(a.best_v, b.best_v);
  EXPECT_EQ(a.gain_trace, b.gain_trace);
  for (std::size_t g = 1; g < a.gain_trace.size(); ++g) EXPECT_GE(a.gain_trace[g], a.gain_trace[g - 1]);
  EXPECT_EQ(a.enhancement, a.best_gain / a.random_baseline.mean);
  EXPECT_GE(a.enhancement, 1.0);
  EXPECT_GE(a.best_gain, a.random_baseline.max);
}

TEST(Genetic, BaselineStatistics) {
  const auto p = dma(8, 9);
  GaConfig cfg;
  cfg.baseline_seed = 10;
  cfg.max_generations = 1;
  const auto res = genetic_optimize([&](const DmaConfiguration& v) { return channel_gain(p, v, 0, 0); }, 8, cfg);
  // recompute the baseline from the same stream
  std::mt19937_64 rng(10);
  std::vector<double> g;
  for (int i = 0; i < 100; ++i) {
    std::vector<std::uint8_t> bits(8);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng() >> 63);
    g.push_back(channel_gain(p, DmaConfiguration(bits), 0, 0));
  }
  double mean = 0.0, mx = 0.0;
  for (double x : g) {
    mean += x / 100.0;
    mx = std::max(mx, x);
  }
  double var = 0.0;
  for (double x : g) var += (x - mean) * (x - mean) / 100.0;
  EXPECT_NEAR(res.random_baseline.mean, mean, 1e-12 * mean);
  EXPECT_NEAR(res.random_baseline.sd, std::sqrt(var), 1e-10 * std::sqrt(var));
  EXPECT_EQ(res.random_baseline.max, mx);
}

TEST(Genetic, ExhaustiveAgreementOverSeeds) {
  const auto p = dma(12, 11);
  const double opt = exhaustive_max(p);
  int good = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GaConfig cfg;
    cfg.seed = seed;
    cfg.baseline_seed = 1000 + seed;
    const auto res = genetic_optimize([&](const DmaConfiguration& v) { return channel_gain(p, v, 0, 0); }, 12, cfg);
    good += res.best_gain >= 0.95 * opt ? 1 : 0;
    EXPECT_GE(res.best_gain, res.random_baseline.max);
  }
  EXPECT_GE(good, 19);
}

TEST(Genetic, ConfigValidation) {
  auto fit = [](const DmaConfiguration&) { return 1.0; };
  GaConfig cfg;
  cfg.population = 1;
  EXPECT_THROW(genetic_optimize(fit, 4, cfg), ArgumentError);
  cfg = {};
  cfg.crossover_rate = 1.0;
  EXPECT_THROW(genetic_optimize(fit, 4, cfg), ArgumentError);
  cfg = {};
  cfg.mutation_rate = 1.5;
  EXPECT_THROW(genetic_optimize(fit, 4, cfg), ArgumentError);
  EXPECT_THROW(genetic_optimize(fit, 0, GaConfig{}), ArgumentError);
}

TEST(Genetic, StallRuleStopsFlatSearch) {
  GaConfig cfg;
  cfg.population = 10;
  cfg.stall_generations = 5;
  const auto res = genetic_optimize([](const DmaConfiguration&) { return 1.0; }, 6, cfg);
  EXPECT_EQ(res.generations_used, 5);
}

}  // namespace
}  // namespace dmace
