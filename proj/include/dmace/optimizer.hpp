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

// Binary configuration search for SISO channel gain.
//
// genetic_optimize() maximizes any fitness over length-n_m bit strings with an
// elitist GA (binary tournament, uniform crossover, per-bit mutation). The
// random baseline configurations are evaluated first and seeded into the
// initial population, so the result never falls below the baseline maximum.

#ifndef DMACE_OPTIMIZER_HPP
#define DMACE_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "dmace/errors.hpp"
#include "dmace/mnt_model.hpp"

namespace dmace {

inline double channel_gain(const SystemParameters& p, const DmaConfiguration& v, Index user, Index feed) {
  if (user < 0 || user >= p.n_u() || feed < 0 || feed >= p.n_f())
    throw ArgumentError("channel_gain: user or feed index out of range");
  return std::norm(end_to_end(p, v)(user, feed));
}

struct GaConfig {
  int population = 200;
  int max_generations = 0;  // 0: 100 * n_m
  int stall_generations = 50;
  double improvement_tol = 1e-6;
  std::uint64_t seed = 0;
  std::uint64_t baseline_seed = 1;
  int baseline_samples = 100;
  double crossover_rate = 0.9;
  double mutation_rate = 0.0;  // 0: 1 / n_m
  int tournament_size = 2;
  int elite = 1;

  void validate() const {
    if (population < 2) throw ArgumentError("GaConfig: population must be at least 2");
    if (max_generations < 0 || stall_generations < 1 || baseline_samples < 1 || tournament_size < 1 || elite < 0 ||
        elite >= population)
      throw ArgumentError("GaConfig: invalid generation, baseline, tournament or elite setting");
    if (!(crossover_rate > 0.0 && crossover_rate < 1.0)) throw ArgumentError("GaConfig: crossover_rate must be in (0,1)");
    if (!(mutation_rate == 0.0 || (mutation_rate > 0.0 && mutation_rate < 1.0)))
      throw ArgumentError("GaConfig: mutation_rate must be in (0,1)");
    if (!(improvement_tol >= 0.0)) throw ArgumentError("GaConfig: improvement_tol must be non-negative");
  }
};

struct BaselineStats {
  double mean = 0.0;
  double sd = 0.0;
  double max = 0.0;
};

struct OptimizationResult {
  DmaConfiguration best_v;
  double best_gain = 0.0;
  int generations_used = 0;
  std::vector<double> gain_trace;  // best gain after each generation, generation 0 first
  BaselineStats random_baseline;
  double enhancement = 0.0;  // best_gain / baseline mean
  long evaluations = 0;
};

namespace detail {

inline DmaConfiguration random_configuration(Index n_m, std::mt19937_64& rng) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n_m));
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() >> 63);
  return DmaConfiguration(std::move(bits));
}

}  // namespace detail

// Maximizes fitness(const DmaConfiguration&) -> double.
template <typename Fitness>
OptimizationResult genetic_optimize(Fitness&& fitness, Index n_m, GaConfig cfg) {
  if (n_m < 1) throw ArgumentError("genetic_optimize: n_m must be at least 1");
  cfg.validate();
  if (cfg.max_generations == 0) cfg.max_generations = static_cast<int>(100 * n_m);
  const double mutation = cfg.mutation_rate > 0.0 ? cfg.mutation_rate : 1.0 / static_cast<double>(n_m);

  OptimizationResult res;
  struct Member {
    DmaConfiguration v;
    double fit;
  };

  std::mt19937_64 base_rng(cfg.baseline_seed);
  std::vector<Member> baseline;
  double sum = 0.0;
  for (int i = 0; i < cfg.baseline_samples; ++i) {
    auto v = detail::random_configuration(n_m, base_rng);
    const double f = fitness(v);
    ++res.evaluations;
    sum += f;
    baseline.push_back({std::move(v), f});
  }
  res.random_baseline.mean = sum / cfg.baseline_samples;
  double var = 0.0;
  res.random_baseline.max = baseline.front().fit;
  for (const auto& m : baseline) {
    var += (m.fit - res.random_baseline.mean) * (m.fit - res.random_baseline.mean);
    res.random_baseline.max = std::max(res.random_baseline.max, m.fit);
  }
  res.random_baseline.sd = std::sqrt(var / cfg.baseline_samples);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Member> pop;
  pop.reserve(static_cast<std::size_t>(cfg.population));
  for (std::size_t i = 0; i < baseline.size() && static_cast<int>(pop.size()) < cfg.population; ++i)
    pop.push_back(baseline[i]);
  while (static_cast<int>(pop.size()) < cfg.population) {
    auto v = detail::random_configuration(n_m, rng);
    const double f = fitness(v);
    ++res.evaluations;
    pop.push_back({std::move(v), f});
  }

  auto by_fitness = [](const Member& a, const Member& b) { return a.fit > b.fit; };
  std::stable_sort(pop.begin(), pop.end(), by_fitness);
  // a baseline sample outside the population still counts as found
  Member best = pop.front();
  for (const auto& m : baseline)
    if (m.fit > best.fit) best = m;
  res.gain_trace.push_back(best.fit);

  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  auto tournament = [&]() -> const Member& {
    std::size_t w = pick(rng);
    for (int t = 1; t < cfg.tournament_size; ++t) {
      const std::size_t c = pick(rng);
      if (pop[c].fit > pop[w].fit) w = c;
    }
    return pop[w];
  };

  int g = 0;
  for (g = 1; g <= cfg.max_generations; ++g) {
    std::vector<Member> next(pop.begin(), pop.begin() + cfg.elite);
    next.reserve(pop.size());
    while (next.size() < pop.size()) {
      const Member& p1 = tournament();
      const Member& p2 = tournament();
      std::vector<std::uint8_t> c1(static_cast<std::size_t>(n_m)), c2(static_cast<std::size_t>(n_m));
      const bool cross = unit(rng) < cfg.crossover_rate;
      for (Index i = 0; i < n_m; ++i) {
        const bool swap = cross && unit(rng) < 0.5;
        c1[static_cast<std::size_t>(i)] = swap ? p2.v[i] : p1.v[i];
        c2[static_cast<std::size_t>(i)] = swap ? p1.v[i] : p2.v[i];
      }
      for (auto* c : {&c1, &c2}) {
        for (auto& b : *c)
          if (unit(rng) < mutation) b ^= 1U;
        if (next.size() < pop.size()) {
          DmaConfiguration v(std::move(*c));
          const double f = fitness(v);
          ++res.evaluations;
          next.push_back({std::move(v), f});
        }
      }
    }
    pop = std::move(next);
    std::stable_sort(pop.begin(), pop.end(), by_fitness);
    if (pop.front().fit > best.fit) best = pop.front();
    res.gain_trace.push_back(best.fit);

    if (g >= cfg.stall_generations) {
      const double then = res.gain_trace[static_cast<std::size_t>(g - cfg.stall_generations)];
      const double scale = std::max(std::abs(then), 1e-300);
      if (best.fit - then <= cfg.improvement_tol * scale) break;
    }
  }
  res.generations_used = std::min(g, cfg.max_generations);
  res.best_v = best.v;
  res.best_gain = best.fit;
  res.enhancement = res.random_baseline.mean != 0.0 ? res.best_gain / res.random_baseline.mean : 0.0;
  return res;
}

}  // namespace dmace

#endif  // DMACE_OPTIMIZER_HPP
