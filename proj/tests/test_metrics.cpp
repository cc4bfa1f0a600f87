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
#include <random>

#include "dmace/estimators.hpp"
#include "dmace/metrics.hpp"
#include "dmace/scenario.hpp"
#include "test_support.hpp"

namespace dmace {
namespace {

using testing::random_matrix;
using testing::random_tensor;

// Offset that does not depend on the configuration.
Tensor3 add_offset(const Tensor3& t, const ComplexMatrix& off) {
  Tensor3 out = t;
  for (Index k = 0; k < out.dim3(); ++k) out.slice(k) += off;
  return out;
}

TEST(Nmse, PerfectAndZeroPrediction) {
  std::mt19937_64 rng(1);
  const Tensor3 h = random_tensor(rng, 3, 2, 10);
  EXPECT_EQ(nmse(h, h), 0.0);
  EXPECT_EQ(nmse(h, Tensor3(3, 2, 10)), 1.0);
}

TEST(Nmse, ScaledResidualExpansion) {
  std::mt19937_64 rng(2);
  const Tensor3 h = random_tensor(rng, 3, 2, 10);
  const Tensor3 e = random_tensor(rng, 3, 2, 10);
  const double eps = 1e-3;
  Tensor3 pred = h;
  for (Index k = 0; k < 10; ++k) pred.slice(k) += eps * e.slice(k);
  double e2 = 0.0, h2 = 0.0;
  for (const auto& x : e.data()) e2 += std::norm(x);
  for (const auto& x : h.data()) h2 += std::norm(x);
  EXPECT_NEAR(nmse(h, pred), eps * eps * e2 / h2, 1e-12 * eps * eps * e2 / h2);
}

TEST(Nmse, Errors) {
  EXPECT_THROW(nmse(Tensor3(2, 2, 2), Tensor3(2, 2, 2)), DegenerateInputError);
  EXPECT_THROW(nmse(Tensor3(2, 2, 2), Tensor3(2, 2, 3)), ArgumentError);
}

TEST(Zeta, PerfectPredictionFlagsEveryEntry) {
  std::mt19937_64 rng(3);
  const Tensor3 h = random_tensor(rng, 2, 2, 8);
  const auto z = zeta(h, h);
  EXPECT_EQ(z.infinite_entries, 4);
  EXPECT_TRUE(std::isinf(z.zeta_db));
  const auto shifted = zeta(h, add_offset(h, random_matrix(rng, 2, 2)));
  EXPECT_EQ(shifted.infinite_entries, 4);
}

TEST(Zeta, OffsetInvariance) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const Tensor3 h = random_tensor(rng, 3, 2, 50);
    Tensor3 pred = h;
    const Tensor3 noise = random_tensor(rng, 3, 2, 50);
    for (Index k = 0; k < 50; ++k) pred.slice(k) += 0.01 * noise.slice(k);
    const double base = zeta(h, pred).zeta_db;
    const double moved = zeta(h, add_offset(pred, 5.0 * random_matrix(rng, 3, 2))).zeta_db;
    EXPECT_LE(std::abs(moved - base), 1e-12);
  }
}

TEST(Zeta, MeanPredictionIsZeroDb) {
  std::mt19937_64 rng(5);
  const Tensor3 h = random_tensor(rng, 2, 3, 40);
  ComplexMatrix mean = ComplexMatrix::Zero(2, 3);
  for (Index k = 0; k < 40; ++k) mean += h.slice(k);
  mean /= 40.0;
  Tensor3 pred(2, 3, 40);
  for (Index k = 0; k < 40; ++k) pred.set_slice(k, mean);
  const auto z = zeta(h, pred);
  EXPECT_NEAR(z.zeta_db, 0.0, 1e-12);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j) EXPECT_NEAR(z.per_entry(i, j), 1.0, 1e-12);
}

TEST(Zeta, HandComputedEntry) {
  // single entry, values 0, 2 measured and 0, 1 predicted: SD 1 over SD 0.5
  Tensor3 h(1, 1, 2), p(1, 1, 2);
  h(0, 0, 1) = 2.0;
  p(0, 0, 1) = 1.0;
  const auto z = zeta(h, p);
  EXPECT_NEAR(z.per_entry(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(z.zeta_db, 20.0 * std::log10(2.0), 1e-12);
}

TEST(Zeta, NeedsTwoConfigurations) {
  EXPECT_THROW(zeta(Tensor3(2, 2, 1), Tensor3(2, 2, 1)), DegenerateInputError);
}

// A perfect model scored against noisy measurements: zeta and NMSE both
// converge to the SNR.
TEST(Zeta, ConvergesToSnrForWhiteNoise) {
  ScenarioSpec s;
  s.n_f = 1;
  s.n_m = 10;
  s.n_u = 1;
  s.coupling_strength = 0.5;
  s.seed = 6;
  const auto p = generate_params(s);
  const auto configs = sample_configs(10, 10000, 7);
  const Tensor3 clean = forward_tensor(p, configs);
  // per-entry SNR: variance over configurations against the noise
  Complex mean{0.0, 0.0};
  for (Index k = 0; k < clean.dim3(); ++k) mean += clean(0, 0, k);
  mean /= static_cast<double>(clean.dim3());
  double var = 0.0;
  for (Index k = 0; k < clean.dim3(); ++k) var += std::norm(clean(0, 0, k) - mean);
  var /= static_cast<double>(clean.dim3());
  const double snr_db = 30.0;
  const double noise_var = var / std::pow(10.0, snr_db / 10.0);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, std::sqrt(noise_var / 2.0));
  Tensor3 meas = clean;
  for (Index k = 0; k < meas.dim3(); ++k) meas(0, 0, k) += Complex(n(rng), n(rng));
  const double z = zeta(meas, clean).zeta_db;
  EXPECT_NEAR(z, snr_db, 0.5);

  const auto ms = measure(p, configs, snr_db, 9);
  EXPECT_NEAR(to_db10(nmse(ms.H_meas, clean)), -snr_db, 0.5);
}

TEST(Evaluate, CollectsBothMetrics) {
  std::mt19937_64 rng(10);
  const Tensor3 h = random_tensor(rng, 2, 2, 20);
  Tensor3 pred = h;
  const Tensor3 e = random_tensor(rng, 2, 2, 20);
  for (Index k = 0; k < 20; ++k) pred.slice(k) += 0.1 * e.slice(k);
  const auto m = evaluate(h, pred);
  EXPECT_EQ(m.q_count, 20);
  EXPECT_NEAR(m.nmse_db, 10.0 * std::log10(m.nmse), 1e-12);
  EXPECT_EQ(m.zeta_db, zeta(h, pred).zeta_db);
  EXPECT_EQ(m.infinite_zeta_entries, 0);
}

TEST(AlignScalar, PureAmbiguity) {
  std::mt19937_64 rng(11);
  const ComplexMatrix a = random_matrix(rng, 3, 6), b = random_matrix(rng, 6, 2);
  const Complex two_i(0.0, 2.0);
  const auto al = align_scalar(two_i * a, b / two_i, a, b);
  EXPECT_NEAR(std::abs(al.gamma - 1.0 / two_i), 0.0, 1e-15);
  EXPECT_LE(al.a_residual, 1e-14);
  EXPECT_LE(al.b_residual, 1e-14);
}

TEST(AlignScalar, IdentityAndIdempotence) {
  std::mt19937_64 rng(12);
  const ComplexMatrix a = random_matrix(rng, 3, 6), b = random_matrix(rng, 6, 2);
  EXPECT_NEAR(std::abs(align_scalar(a, b, a, b).gamma - 1.0), 0.0, 1e-12);
  const Complex g(0.7, -0.2);
  const auto first = align_scalar(g * a, b / g, a, b);
  const auto again = align_scalar(first.gamma * g * a, b / g / first.gamma, a, b);
  EXPECT_LE(std::abs(again.gamma - 1.0), 1e-12);
}

TEST(AlignScalar, Errors) {
  EXPECT_THROW(align_scalar(ComplexMatrix::Zero(2, 2), ComplexMatrix::Ones(2, 1), ComplexMatrix::Ones(2, 2),
                            ComplexMatrix::Ones(2, 1)),
               DegenerateInputError);
  EXPECT_THROW(align_scalar(ComplexMatrix::Ones(2, 3), ComplexMatrix::Ones(2, 1), ComplexMatrix::Ones(2, 2),
                            ComplexMatrix::Ones(2, 1)),
               ArgumentError);
}

TEST(AlignScalar, NoiselessBtals2AgainstGroundTruth) {
  ScenarioSpec s;
  s.n_f = 2;
  s.n_m = 6;
  s.n_u = 3;
  s.coupling_strength = 0.8;
  s.seed = 13;
  const auto p = generate_params(s);
  const auto configs = sample_configs(6, 3 * min_k(ProblemType::type2, 2, 6, 3), 14);
  Tensor3 h = forward_tensor(p, configs);
  for (Index k = 0; k < h.dim3(); ++k) h.slice(k) -= p.H0;
  const auto rep = btals2(h, build_omega_stack(p.hardware(), configs));
  const auto al = align_scalar(*rep.A_hat, *rep.B_hat, p.A, p.B);
  EXPECT_LE(al.a_residual, 1e-8);
  EXPECT_LE(al.b_residual, 1e-8);
}

}  // namespace
}  // namespace dmace
